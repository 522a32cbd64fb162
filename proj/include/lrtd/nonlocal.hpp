#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lrtd/tape.hpp"
#include "lrtd/tensor.hpp"

namespace lrtd {

// Attention logits are clamped here before exponentiation; events are counted
// so runs can report saturation.
constexpr double kAttnLogitClamp = 60.0;

// Temporal subsampling of the phi/g paths (10 steps -> 5).
constexpr int kPoolWindow = 2;
constexpr int kPoolStride = 2;

enum class MatrixMode { raw, normalized };

MatrixMode parse_matrix_mode(const std::string& s);
std::string to_string(MatrixMode mode);

// T x T' pairwise dependency values between each time step and the
// subsampled steps. raw entries are exponentials (all positive); normalized
// rows are softmaxed and sum to 1.
struct DependencyMatrix {
  Tensor values;
  MatrixMode mode = MatrixMode::raw;
};

// M_ij from embedded similarity exp(theta(x_i)^T phi(xhat_j)), with the phi
// path max-pooled in time. x is the H x T hidden sequence.
DependencyMatrix dependency_matrix(const Tensor& x, const Tensor& w_theta, const Tensor& w_phi,
                                   MatrixMode mode, int* clamp_events = nullptr);

// Identity embeddings: similarity computed on the given rows directly
// (theta = phi = id). Used to score raw clip features without a model.
DependencyMatrix dependency_matrix_identity(const Tensor& x, MatrixMode mode,
                                            int* clamp_events = nullptr);

// Plain dot products x_i^T xhat_j without embeddings or exponentiation.
Tensor dot_product_matrix(const Tensor& x);

// The full block: attention-weighted sum of g(xhat) with residual output
// z = W_z y + x. Differentiable end to end.
Var nonlocal_forward(Tape& tape, Param& w_theta, Param& w_phi, Param& w_g, Param& w_z, Var x);

// Pairwise-interaction count per clip, with and without subsampling.
long pair_count(int T, bool subsampled);

// TSV export: header `clip_id` plus v0..v{T*T'-1}, one row per clip,
// values row-major.
void write_depmatrix_tsv(const std::string& path,
                         const std::vector<std::pair<std::string, DependencyMatrix>>& rows);

}  // namespace lrtd
