#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lrtd/tape.hpp"
#include "lrtd/tensor.hpp"

namespace lrtd {

struct EncoderConfig {
  int dim = 16;        // input feature dim D
  int hidden = 32;     // LSTM width H; theta/phi/g use H/2 channels
  int clip_len = 10;   // T
  int num_phases = 7;  // P
  double dropout = 0.1;

  void validate() const;
};

// All learnable weights: input projection, LSTM, classifier head, and the
// non-local block. The projection (D -> H affine + tanh) is the seam where a
// real visual front-end would plug in.
struct ModelParams {
  EncoderConfig cfg;

  Param w_in, b_in;           // H x D, H x 1
  Param w_x, w_h, b_lstm;     // 4H x H each gate stack, bias 4H x 1; gate order [i f g o]
  Param w_out, b_out;         // P x H, P x 1
  Param w_theta, w_phi, w_g;  // (H/2) x H
  Param w_z;                  // H x (H/2), zero-init so the block starts as identity

  static ModelParams init(const EncoderConfig& cfg, std::uint64_t seed);

  // Stable order used by the optimizer and the checkpoint format.
  std::vector<Param*> all();
  std::vector<Param*> backbone_params();  // everything except the non-local block
  std::vector<Param*> nonlocal_params();
  std::vector<const Param*> all() const;
};

// Tape-building functions take ModelParams by mutable reference: weights
// enter the tape as leaves so a later backward() can accumulate into grads.
// Forward-only callers never mutate anything.

// LSTM encoder: D x T clip features -> H x T hidden sequence. Column t
// depends only on frames <= t.
Var encode(Tape& tape, ModelParams& p, const Tensor& clip_features);

// Global temporal max-pool then affine map to P logits (P x 1).
Var classify(Tape& tape, ModelParams& p, Var hidden_seq);

// Shared classifier head applied to one column of the hidden sequence.
Var frame_logits(Tape& tape, ModelParams& p, Var hidden_seq, int t);

// Clip logits with the non-local block optionally applied between encoder and
// head. The single forward path used by training, scoring, and inference.
Var clip_logits(Tape& tape, ModelParams& p, const Tensor& clip_features, bool use_nonlocal);

// Inference helpers (throwaway tapes, no backward).
Tensor encode_tensor(ModelParams& p, const Tensor& clip_features);
Tensor hidden_tensor(ModelParams& p, const Tensor& clip_features, bool use_nonlocal);
int predict_label(ModelParams& p, const Tensor& clip_features, bool use_nonlocal);

// Entropy (nats) of the MC-dropout-averaged clip prediction. Inverted dropout
// masks are applied to the final hidden sequence; the seed makes each clip's
// mask stream independent of evaluation order. K passes with rate 0 collapse
// to plain softmax entropy.
double predictive_entropy(ModelParams& p, const Tensor& clip_features, int mc_passes, double rate,
                          std::uint64_t seed, bool use_nonlocal);

// Per-frame variant: entropy of the averaged per-frame distributions.
std::vector<double> frame_entropies(ModelParams& p, const Tensor& clip_features, int mc_passes,
                                    double rate, std::uint64_t seed, bool use_nonlocal);

// Checkpoint: magic, version, JSON header (config + param names/shapes),
// float64 payloads in header order. Byte-identical for identical params.
void save_checkpoint(const std::string& path, const ModelParams& p);
ModelParams load_checkpoint(const std::string& path);

}  // namespace lrtd
