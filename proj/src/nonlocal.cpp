#include "lrtd/nonlocal.hpp"

#include <fstream>

#include "lrtd/errors.hpp"
#include "lrtd/ops.hpp"
#include "lrtd/text.hpp"

namespace lrtd {

MatrixMode parse_matrix_mode(const std::string& s) {
  if (s == "raw") return MatrixMode::raw;
  if (s == "normalized") return MatrixMode::normalized;
  throw ValidationError("matrix mode must be 'raw' or 'normalized', got '" + s + "'");
}

std::string to_string(MatrixMode mode) { return mode == MatrixMode::raw ? "raw" : "normalized"; }

namespace {

DependencyMatrix matrix_from_embeddings(const Tensor& theta, const Tensor& phi, MatrixMode mode,
                                        int* clamp_events) {
  const Tensor phi_hat = ops::maxpool_time(phi, kPoolWindow, kPoolStride);
  const Tensor logits = ops::clamp(ops::matmul(ops::transpose(theta), phi_hat), -kAttnLogitClamp,
                                   kAttnLogitClamp, clamp_events);
  DependencyMatrix m;
  m.mode = mode;
  m.values = mode == MatrixMode::raw ? ops::exp_(logits) : ops::softmax_rows(logits);
  return m;
}

}  // namespace

DependencyMatrix dependency_matrix(const Tensor& x, const Tensor& w_theta, const Tensor& w_phi,
                                   MatrixMode mode, int* clamp_events) {
  if (x.cols() < 2)
    throw DimensionError("dependency_matrix: need at least 2 time steps, got " + x.shape_str());
  return matrix_from_embeddings(ops::matmul(w_theta, x), ops::matmul(w_phi, x), mode, clamp_events);
}

DependencyMatrix dependency_matrix_identity(const Tensor& x, MatrixMode mode, int* clamp_events) {
  if (x.cols() < 2)
    throw DimensionError("dependency_matrix: need at least 2 time steps, got " + x.shape_str());
  return matrix_from_embeddings(x, x, mode, clamp_events);
}

Tensor dot_product_matrix(const Tensor& x) {
  if (x.cols() < 2)
    throw DimensionError("dot_product_matrix: need at least 2 time steps, got " + x.shape_str());
  const Tensor x_hat = ops::maxpool_time(x, kPoolWindow, kPoolStride);
  return ops::matmul(ops::transpose(x), x_hat);
}

Var nonlocal_forward(Tape& tape, Param& w_theta, Param& w_phi, Param& w_g, Param& w_z, Var x) {
  Var theta = tape.matmul(tape.leaf(w_theta), x);
  Var phi_hat = tape.maxpool_time(tape.matmul(tape.leaf(w_phi), x), kPoolWindow, kPoolStride);
  Var g_hat = tape.maxpool_time(tape.matmul(tape.leaf(w_g), x), kPoolWindow, kPoolStride);
  Var logits =
      tape.clamp(tape.matmul(tape.transpose(theta), phi_hat), -kAttnLogitClamp, kAttnLogitClamp);
  Var attn = tape.softmax_rows(logits);  // T x T', rows normalized
  Var y = tape.matmul(g_hat, tape.transpose(attn));
  return tape.add(tape.matmul(tape.leaf(w_z), y), x);
}

long pair_count(int T, bool subsampled) {
  if (T < 2) throw ValidationError("pair_count: need T >= 2");
  const long t = T;
  return subsampled ? t * (t / 2) : t * t;
}

void write_depmatrix_tsv(const std::string& path,
                         const std::vector<std::pair<std::string, DependencyMatrix>>& rows) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  if (!rows.empty()) {
    os << "clip_id";
    for (std::size_t i = 0; i < rows.front().second.values.size(); ++i) os << "\tv" << i;
    os << '\n';
  }
  for (const auto& [clip_id, m] : rows) {
    os << clip_id;
    for (std::size_t i = 0; i < m.values.size(); ++i) os << '\t' << fmt_double(m.values[i]);
    os << '\n';
  }
  if (!os) throw IoError("write failed on '" + path + "'");
}

}  // namespace lrtd
