#include "lrtd/ops.hpp"

#include <algorithm>
#include <cmath>

#include "lrtd/errors.hpp"

namespace lrtd::ops {

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner extents of " + a.shape_str() + " and " + b.shape_str() +
                         " do not match");
  }
  Tensor out(a.rows(), b.cols());
  const int m = a.rows(), k = a.cols(), n = b.cols();
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      const double av = a.at(i, p);
      if (av == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        out.at(i, j) += av * b.at(p, j);
      }
    }
  }
  require_finite(out, "matmul");
  return out;
}

Tensor transpose(const Tensor& a) {
  Tensor out(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  require_finite(out, "add");
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  require_finite(out, "sub");
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  require_finite(out, "mul");
  return out;
}

Tensor scale(const Tensor& a, double c) {
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c;
  require_finite(out, "scale");
  return out;
}

Tensor add_bias_cols(const Tensor& m, const Tensor& bias) {
  if (bias.cols() != 1 || bias.rows() != m.rows()) {
    throw DimensionError("add_bias_cols: matrix " + m.shape_str() + " with bias " +
                         bias.shape_str());
  }
  Tensor out = m;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out.at(i, j) += bias.at(i, 0);
  require_finite(out, "add_bias_cols");
  return out;
}

Tensor sigmoid(const Tensor& a) {
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-out[i]));
  return out;
}

Tensor tanh_(const Tensor& a) {
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
  return out;
}

Tensor exp_(const Tensor& a) {
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(out[i]);
  require_finite(out, "exp");
  return out;
}

Tensor clamp(const Tensor& a, double lo, double hi, int* clamp_events) {
  Tensor out = a;
  int events = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] < lo) {
      out[i] = lo;
      ++events;
    } else if (out[i] > hi) {
      out[i] = hi;
      ++events;
    }
  }
  if (clamp_events) *clamp_events += events;
  return out;
}

Tensor slice_rows(const Tensor& a, int r0, int r1) {
  if (r0 < 0 || r1 > a.rows() || r0 >= r1) {
    throw DimensionError("slice_rows: range [" + std::to_string(r0) + ", " + std::to_string(r1) +
                         ") invalid for " + a.shape_str());
  }
  Tensor out(r1 - r0, a.cols());
  for (int i = r0; i < r1; ++i)
    for (int j = 0; j < a.cols(); ++j) out.at(i - r0, j) = a.at(i, j);
  return out;
}

Tensor select_col(const Tensor& a, int j) {
  if (j < 0 || j >= a.cols()) {
    throw DimensionError("select_col: column " + std::to_string(j) + " out of range for " +
                         a.shape_str());
  }
  Tensor out(a.rows(), 1);
  for (int i = 0; i < a.rows(); ++i) out.at(i, 0) = a.at(i, j);
  return out;
}

Tensor concat_cols(const std::vector<const Tensor*>& cols) {
  if (cols.empty()) throw DimensionError("concat_cols: empty input");
  int total = 0;
  const int rows = cols.front()->rows();
  for (const Tensor* c : cols) {
    if (c->rows() != rows) {
      throw DimensionError("concat_cols: row mismatch " + c->shape_str() + " vs " +
                           cols.front()->shape_str());
    }
    total += c->cols();
  }
  Tensor out(rows, total);
  int at = 0;
  for (const Tensor* c : cols) {
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < c->cols(); ++j) out.at(i, at + j) = c->at(i, j);
    at += c->cols();
  }
  return out;
}

Tensor maxpool_time(const Tensor& x, int k, int s, std::vector<int>* argmax) {
  if (k < 1 || s < 1) throw DimensionError("maxpool_time: window and stride must be positive");
  if (k > x.cols()) {
    throw DimensionError("maxpool_time: window " + std::to_string(k) + " exceeds time extent of " +
                         x.shape_str());
  }
  const int out_t = (x.cols() - k) / s + 1;
  Tensor out(x.rows(), out_t);
  if (argmax) argmax->assign(static_cast<std::size_t>(x.rows()) * out_t, 0);
  for (int c = 0; c < x.rows(); ++c) {
    for (int j = 0; j < out_t; ++j) {
      const int start = j * s;
      double best = x.at(c, start);
      int best_t = start;
      for (int t = start + 1; t < start + k; ++t) {
        if (x.at(c, t) > best) {
          best = x.at(c, t);
          best_t = t;
        }
      }
      out.at(c, j) = best;
      if (argmax) (*argmax)[static_cast<std::size_t>(c) * out_t + j] = best_t;
    }
  }
  return out;
}

Tensor softmax_rows(const Tensor& x) {
  require_finite(x, "softmax_rows input");
  Tensor out = x;
  for (int i = 0; i < x.rows(); ++i) {
    double mx = x.at(i, 0);
    for (int j = 1; j < x.cols(); ++j) mx = std::max(mx, x.at(i, j));
    double sum = 0.0;
    for (int j = 0; j < x.cols(); ++j) {
      const double e = std::exp(x.at(i, j) - mx);
      out.at(i, j) = e;
      sum += e;
    }
    for (int j = 0; j < x.cols(); ++j) out.at(i, j) /= sum;
  }
  return out;
}

double logsumexp_col(const Tensor& logits) {
  double mx = logits[0];
  for (std::size_t i = 1; i < logits.size(); ++i) mx = std::max(mx, logits[i]);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) sum += std::exp(logits[i] - mx);
  return mx + std::log(sum);
}

}  // namespace lrtd::ops
