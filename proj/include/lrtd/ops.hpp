#pragma once

#include "lrtd/tensor.hpp"

namespace lrtd::ops {

// Pure forward kernels. The Tape wraps these with backward closures; scoring
// and inference paths that need no gradients call them directly.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_bias_cols(const Tensor& m, const Tensor& bias);
Tensor sigmoid(const Tensor& a);
Tensor tanh_(const Tensor& a);
Tensor exp_(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi, int* clamp_events = nullptr);
Tensor slice_rows(const Tensor& a, int r0, int r1);
Tensor select_col(const Tensor& a, int j);
Tensor concat_cols(const std::vector<const Tensor*>& cols);

// Max over sliding windows along the column (time) axis, window k stride s.
// Output width floor((cols - k) / s) + 1. argmax (first index on ties) is
// written per output element when provided.
Tensor maxpool_time(const Tensor& x, int k, int s, std::vector<int>* argmax = nullptr);

// Row-wise softmax with per-row max subtraction; rows sum to 1 within 1e-12.
Tensor softmax_rows(const Tensor& x);

double logsumexp_col(const Tensor& logits);

}  // namespace lrtd::ops
