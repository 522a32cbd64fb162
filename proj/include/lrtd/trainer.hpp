#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lrtd/dataset.hpp"
#include "lrtd/metrics.hpp"
#include "lrtd/model.hpp"

namespace lrtd {

struct TrainConfig {
  int pretrain_epochs = 25;
  int finetune_epochs = 25;
  double pretrain_lr = 5e-4;           // recurrent stage, plain gradient descent
  double finetune_lr = 5e-5;           // backbone group while fine-tuning end to end
  double finetune_nonlocal_lr = 5e-4;  // attention-block group while fine-tuning
  double decay_factor = 10.0;
  int decay_period = 3;  // epochs between learning-rate cuts
  std::string pretrain_optimizer = "sgd";
  std::string finetune_optimizer = "adam";
  int batch_size = 32;
  int epoch_cap = 25;
  std::uint64_t seed = 0;
  void validate() const;
};

// lr0 divided by factor every `period` epochs (0-based epoch index).
double scheduled_lr(double lr0, int epoch, double factor, int period);

struct TrainReport {
  std::vector<double> stage1_losses;  // mean cross-entropy per epoch
  std::vector<double> stage2_losses;
};

// Two-stage training: the recurrent encoder and classifier first (attention
// block bypassed), then the full network end to end. Deterministic given the
// config seed; the clip order supplied by the caller does not matter. When
// warm_from is given, optimization starts from those weights instead of a
// fresh seeded init (same schedule otherwise).
ModelParams train_model(const std::vector<const Clip*>& labeled, const EncoderConfig& enc_cfg,
                        const TrainConfig& cfg, TrainReport* report = nullptr,
                        const ModelParams* warm_from = nullptr);

// Per-frame phase predictions for a whole video: each frame from the T-1'th
// on is predicted by the clip ending there; earlier frames inherit the first
// clip's prediction.
std::vector<int> predict_video(ModelParams& params, const Video& video, bool use_nonlocal);

std::vector<VideoMetrics> evaluate_videos(ModelParams& params, const Dataset& data,
                                          const std::vector<std::string>& video_ids,
                                          bool use_nonlocal);

}  // namespace lrtd
