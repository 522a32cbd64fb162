#include "lrtd/tape.hpp"

#include <cmath>
#include <utility>

#include "lrtd/errors.hpp"
#include "lrtd/ops.hpp"

namespace lrtd {

Var Tape::push(Tensor value, std::function<void(Tape&)> back) {
  Node n;
  n.value = std::move(value);
  n.grad = Tensor(n.value.rows(), n.value.cols());
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

double Tape::scalar_value(Var v) const {
  const Tensor& t = value(v);
  if (t.size() != 1) throw DimensionError("scalar_value: node is " + t.shape_str());
  return t[0];
}

Var Tape::input(Tensor v) {
  require_finite(v, "tape input");
  return push(std::move(v), nullptr);
}

Var Tape::leaf(Param& p) {
  require_finite(p.value, p.id.c_str());
  Param* pp = &p;
  Var out = push(p.value, nullptr);
  int idx = out.idx;
  nodes_[idx].back = [pp, idx](Tape& t) {
    const Tensor& g = t.nodes_[idx].grad;
    for (std::size_t i = 0; i < g.size(); ++i) pp->grad[i] += g[i];
  };
  return out;
}

Var Tape::matmul(Var a, Var b) {
  int ia = a.idx, ib = b.idx;
  Var out = push(ops::matmul(value(a), value(b)), nullptr);
  int io = out.idx;
  nodes_[io].back = [ia, ib, io](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    const Tensor& va = t.nodes_[ia].value;
    const Tensor& vb = t.nodes_[ib].value;
    Tensor& ga = t.nodes_[ia].grad;
    Tensor& gb = t.nodes_[ib].grad;
    // dA += g * B^T
    for (int i = 0; i < va.rows(); ++i)
      for (int j = 0; j < vb.cols(); ++j) {
        const double gv = g.at(i, j);
        if (gv == 0.0) continue;
        for (int p = 0; p < va.cols(); ++p) ga.at(i, p) += gv * vb.at(p, j);
      }
    // dB += A^T * g
    for (int p = 0; p < vb.rows(); ++p)
      for (int i = 0; i < va.rows(); ++i) {
        const double av = va.at(i, p);
        if (av == 0.0) continue;
        for (int j = 0; j < vb.cols(); ++j) gb.at(p, j) += av * g.at(i, j);
      }
  };
  return out;
}

Var Tape::transpose(Var a) {
  int ia = a.idx;
  Var out = push(ops::transpose(value(a)), nullptr);
  int io = out.idx;
  nodes_[io].back = [ia, io](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    Tensor& ga = t.nodes_[ia].grad;
    for (int i = 0; i < g.rows(); ++i)
      for (int j = 0; j < g.cols(); ++j) ga.at(j, i) += g.at(i, j);
  };
  return out;
}

Var Tape::add(Var a, Var b) {
  int ia = a.idx, ib = b.idx;
  Var out = push(ops::add(value(a), value(b)), nullptr);
  int io = out.idx;
  nodes_[io].back = [ia, ib, io](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    Tensor& ga = t.nodes_[ia].grad;
    Tensor& gb = t.nodes_[ib].grad;
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
      gb[i] += g[i];
    }
  };
  return out;
}

Var Tape::sub(Var a, Var b) {
  int ia = a.idx, ib = b.idx;
  Var out = push(ops::sub(value(a), value(b)), nullptr);
  int io = out.idx;
  nodes_[io].back = [ia, ib, io](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    Tensor& ga = t.nodes_[ia].grad;
    Tensor& gb = t.nodes_[ib].grad;
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
      gb[i] -= g[i];
    }
  };
  return out;
}

Var Tape::mul(Var a, Var b) {
  int ia = a.idx, ib = b.idx;
  Var out = push(ops::mul(value(a), value(b)), nullptr);
  int io = out.idx;
  nodes_[io].back = [ia, ib, io](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    const Tensor& va = t.nodes_[ia].value;
    const Tensor& vb = t.nodes_[ib].value;
    Tensor& ga = t.nodes_[ia].grad;
    Tensor& gb = t.nodes_[ib].grad;
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i] * vb[i];
      gb[i] += g[i] * va[i];
    }
  };
  return out;
}

Var Tape::scale(Var a, double c) {
  int ia = a.idx;
  Var out = push(ops::scale(value(a), c), nullptr);
  int io = out.idx;
  nodes_[io].back = [ia, io, c](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    Tensor& ga = t.nodes_[ia].grad;
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
  };
  return out;
}

Var Tape::add_bias_cols(Var m, Var bias) {
  int im = m.idx, ib = bias.idx;
  Var out = push(ops::add_bias_cols(value(m), value(bias)), nullptr);
  int io = out.idx;
  nodes_[io].back = [im, ib, io](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    Tensor& gm = t.nodes_[im].grad;
    Tensor& gb = t.nodes_[ib].grad;
    for (int i = 0; i < g.rows(); ++i) {
      for (int j = 0; j < g.cols(); ++j) {
        gm.at(i, j) += g.at(i, j);
        gb.at(i, 0) += g.at(i, j);
      }
    }
  };
  return out;
}

Var Tape::sigmoid(Var a) {
  int ia = a.idx;
  Var out = push(ops::sigmoid(value(a)), nullptr);
  int io = out.idx;
  nodes_[io].back = [ia, io](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    const Tensor& y = t.nodes_[io].value;
    Tensor& ga = t.nodes_[ia].grad;
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  };
  return out;
}

Var Tape::tanh_(Var a) {
  int ia = a.idx;
  Var out = push(ops::tanh_(value(a)), nullptr);
  int io = out.idx;
  nodes_[io].back = [ia, io](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    const Tensor& y = t.nodes_[io].value;
    Tensor& ga = t.nodes_[ia].grad;
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  };
  return out;
}

Var Tape::exp_(Var a) {
  int ia = a.idx;
  Var out = push(ops::exp_(value(a)), nullptr);
  int io = out.idx;
  nodes_[io].back = [ia, io](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    const Tensor& y = t.nodes_[io].value;
    Tensor& ga = t.nodes_[ia].grad;
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
  };
  return out;
}

Var Tape::clamp(Var a, double lo, double hi, int* clamp_events) {
  int ia = a.idx;
  Var out = push(ops::clamp(value(a), lo, hi, clamp_events), nullptr);
  int io = out.idx;
  nodes_[io].back = [ia, io, lo, hi](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    const Tensor& x = t.nodes_[ia].value;
    Tensor& ga = t.nodes_[ia].grad;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x[i] >= lo && x[i] <= hi) ga[i] += g[i];
    }
  };
  return out;
}

Var Tape::slice_rows(Var a, int r0, int r1) {
  int ia = a.idx;
  Var out = push(ops::slice_rows(value(a), r0, r1), nullptr);
  int io = out.idx;
  nodes_[io].back = [ia, io, r0](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    Tensor& ga = t.nodes_[ia].grad;
    for (int i = 0; i < g.rows(); ++i)
      for (int j = 0; j < g.cols(); ++j) ga.at(r0 + i, j) += g.at(i, j);
  };
  return out;
}

Var Tape::select_col(Var a, int j) {
  int ia = a.idx;
  Var out = push(ops::select_col(value(a), j), nullptr);
  int io = out.idx;
  nodes_[io].back = [ia, io, j](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    Tensor& ga = t.nodes_[ia].grad;
    for (int i = 0; i < g.rows(); ++i) ga.at(i, j) += g.at(i, 0);
  };
  return out;
}

Var Tape::concat_cols(const std::vector<Var>& cols) {
  std::vector<const Tensor*> vs;
  vs.reserve(cols.size());
  for (Var c : cols) vs.push_back(&value(c));
  Tensor out = ops::concat_cols(vs);
  std::vector<int> idxs;
  idxs.reserve(cols.size());
  for (Var c : cols) idxs.push_back(c.idx);
  Var o = push(std::move(out), nullptr);
  int io = o.idx;
  nodes_[io].back = [idxs, io](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    int at = 0;
    for (int ci : idxs) {
      Tensor& gc = t.nodes_[ci].grad;
      for (int i = 0; i < gc.rows(); ++i)
        for (int j = 0; j < gc.cols(); ++j) gc.at(i, j) += g.at(i, at + j);
      at += gc.cols();
    }
  };
  return o;
}

Var Tape::maxpool_time(Var x, int k, int s) {
  int ix = x.idx;
  std::vector<int> argmax;
  Tensor out = ops::maxpool_time(value(x), k, s, &argmax);
  const int out_t = out.cols();
  Var o = push(std::move(out), nullptr);
  int io = o.idx;
  nodes_[io].back = [ix, io, argmax, out_t](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    Tensor& gx = t.nodes_[ix].grad;
    for (int c = 0; c < g.rows(); ++c)
      for (int j = 0; j < out_t; ++j)
        gx.at(c, argmax[static_cast<std::size_t>(c) * out_t + j]) += g.at(c, j);
  };
  return o;
}

Var Tape::softmax_rows(Var x) {
  int ix = x.idx;
  Var out = push(ops::softmax_rows(value(x)), nullptr);
  int io = out.idx;
  nodes_[io].back = [ix, io](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    const Tensor& y = t.nodes_[io].value;
    Tensor& gx = t.nodes_[ix].grad;
    for (int i = 0; i < g.rows(); ++i) {
      double dot = 0.0;
      for (int j = 0; j < g.cols(); ++j) dot += g.at(i, j) * y.at(i, j);
      for (int j = 0; j < g.cols(); ++j) gx.at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
    }
  };
  return out;
}

Var Tape::mul_const(Var a, Tensor mask) {
  require_same_shape(value(a), mask, "mul_const");
  int ia = a.idx;
  Tensor out = ops::mul(value(a), mask);
  Var o = push(std::move(out), nullptr);
  int io = o.idx;
  nodes_[io].back = [ia, io, mask = std::move(mask)](Tape& t) {
    const Tensor& g = t.nodes_[io].grad;
    Tensor& ga = t.nodes_[ia].grad;
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * mask[i];
  };
  return o;
}

Var Tape::cross_entropy_logits(Var logits, int label) {
  const Tensor& l = value(logits);
  if (l.cols() != 1)
    throw DimensionError("cross_entropy_logits: logits must be a column, got " + l.shape_str());
  if (label < 0 || label >= l.rows()) {
    throw ValidationError("cross_entropy_logits: label " + std::to_string(label) +
                          " out of range for " + std::to_string(l.rows()) + " classes");
  }
  const double lse = ops::logsumexp_col(l);
  const double loss = lse - l[static_cast<std::size_t>(label)];
  int il = logits.idx;
  Var o = push(Tensor::scalar(loss), nullptr);
  int io = o.idx;
  nodes_[io].back = [il, io, label](Tape& t) {
    const double g = t.nodes_[io].grad[0];
    const Tensor& l = t.nodes_[il].value;
    Tensor sm = ops::softmax_rows(ops::transpose(l));  // 1 x P
    Tensor& gl = t.nodes_[il].grad;
    for (int i = 0; i < l.rows(); ++i) {
      double d = sm.at(0, i) - (i == label ? 1.0 : 0.0);
      gl.at(i, 0) += g * d;
    }
  };
  return o;
}

void Tape::backward(Var root) {
  if (backward_done_) throw ValidationError("Tape::backward: tape already consumed (single-use)");
  backward_done_ = true;
  const Tensor& r = value(root);
  if (r.size() != 1) throw DimensionError("backward root must be scalar, got " + r.shape_str());
  grad_mut(root).fill(1.0);
  for (int i = root.idx; i >= 0; --i) {
    if (nodes_[i].back) nodes_[i].back(*this);
  }
}

}  // namespace lrtd
