#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lrtd/tensor.hpp"

namespace lrtd {

// A learnable weight. grad always has the shape of value and is zeroed at the
// start of each optimization step.
struct Param {
  std::string id;
  Tensor value;
  Tensor grad;

  Param() = default;
  Param(std::string name, Tensor v) : id(std::move(name)), value(std::move(v)) {
    grad = Tensor(value.rows(), value.cols());
  }
  void zero_grad() { grad.fill(0.0); }
};

// Handle to a node on a Tape.
struct Var {
  int idx = -1;
};

// Reverse-mode tape. Each primitive records its output value and a closure
// that scatters the output gradient to its inputs. backward() walks nodes in
// exact reverse execution order. A tape is single-use: build a graph, call
// backward once, discard.
class Tape {
 public:
  Var input(Tensor v);
  Var leaf(Param& p);

  const Tensor& value(Var v) const { return nodes_[v.idx].value; }
  const Tensor& grad(Var v) const { return nodes_[v.idx].grad; }
  double scalar_value(Var v) const;

  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double c);
  Var add_bias_cols(Var m, Var bias);
  Var sigmoid(Var a);
  Var tanh_(Var a);
  Var exp_(Var a);
  Var clamp(Var a, double lo, double hi, int* clamp_events = nullptr);
  Var slice_rows(Var a, int r0, int r1);
  Var select_col(Var a, int j);
  Var concat_cols(const std::vector<Var>& cols);
  Var maxpool_time(Var x, int k, int s);
  Var softmax_rows(Var x);

  // Multiply elementwise by a constant mask (inverted-dropout style masks).
  Var mul_const(Var a, Tensor mask);

  // Cross-entropy of a P x 1 logits column against an integer label, via
  // log-sum-exp. Returns a 1 x 1 scalar node.
  Var cross_entropy_logits(Var logits, int label);

  // d(loss)/d(node) for every node, seeded with 1 at root (must be 1 x 1).
  void backward(Var root);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Tape&)> back;
  };

  Var push(Tensor value, std::function<void(Tape&)> back);
  Tensor& grad_mut(Var v) { return nodes_[v.idx].grad; }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace lrtd
