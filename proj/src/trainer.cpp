#include "lrtd/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "lrtd/errors.hpp"
#include "lrtd/rng.hpp"

namespace lrtd {

namespace {

void check_optimizer_name(const std::string& name, const char* field) {
  if (name != "sgd" && name != "adam") {
    throw ValidationError(std::string("TrainConfig: ") + field +
                          " must be \"sgd\" or \"adam\", got \"" + name + "\"");
  }
}

struct AdamState {
  std::vector<Tensor> m, v;
  long step = 0;
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  void init(const std::vector<Param*>& params) {
    m.reserve(params.size());
    v.reserve(params.size());
    for (const Param* p : params) {
      m.emplace_back(p->value.rows(), p->value.cols());
      v.emplace_back(p->value.rows(), p->value.cols());
    }
  }
};

void apply_step(const std::vector<Param*>& params, const std::vector<double>& lrs,
                const std::string& optimizer, AdamState& adam) {
  if (optimizer == "sgd") {
    for (std::size_t k = 0; k < params.size(); ++k) {
      Param& p = *params[k];
      for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] -= lrs[k] * p.grad[i];
    }
    return;
  }
  ++adam.step;
  const double c1 = 1.0 - std::pow(AdamState::kBeta1, static_cast<double>(adam.step));
  const double c2 = 1.0 - std::pow(AdamState::kBeta2, static_cast<double>(adam.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Param& p = *params[k];
    Tensor& m = adam.m[k];
    Tensor& v = adam.v[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = AdamState::kBeta1 * m[i] + (1.0 - AdamState::kBeta1) * g;
      v[i] = AdamState::kBeta2 * v[i] + (1.0 - AdamState::kBeta2) * g * g;
      p.value[i] -= lrs[k] * (m[i] / c1) / (std::sqrt(v[i] / c2) + AdamState::kEps);
    }
  }
}

// One optimization stage over the labeled clips. Throws TrainingError naming
// the exact step if the loss or any weight stops being finite.
void run_stage(int stage, const std::vector<const Clip*>& clips, ModelParams& params,
               const std::vector<Param*>& trainable, const std::vector<double>& base_lrs,
               const std::string& optimizer, int epochs, bool use_nonlocal, const TrainConfig& cfg,
               std::uint64_t seed, std::vector<double>* losses_out) {
  AdamState adam;
  if (optimizer == "adam") adam.init(trainable);

  Rng rng(seed);
  std::vector<const Clip*> order = clips;
  const int n = static_cast<int>(order.size());

  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    std::vector<double> lrs(base_lrs.size());
    for (std::size_t k = 0; k < base_lrs.size(); ++k) {
      lrs[k] = scheduled_lr(base_lrs[k], epoch, cfg.decay_factor, cfg.decay_period);
    }

    double epoch_loss_sum = 0.0;
    int batch_index = 0;
    for (int start = 0; start < n; start += cfg.batch_size, ++batch_index) {
      const int batch_n = std::min(cfg.batch_size, n - start);
      for (Param* p : trainable) p->zero_grad();

      double batch_loss_sum = 0.0;
      const std::string where = "stage " + std::to_string(stage) + ", epoch " +
                                std::to_string(epoch) + ", batch " + std::to_string(batch_index);
      try {
        for (int b = 0; b < batch_n; ++b) {
          const Clip& clip = *order[start + b];
          Tape tape;
          Var logits = clip_logits(tape, params, clip.features, use_nonlocal);
          Var loss = tape.cross_entropy_logits(logits, clip.label);
          batch_loss_sum += tape.scalar_value(loss);
          tape.backward(tape.scale(loss, 1.0 / batch_n));
        }
      } catch (const TrainingError&) {
        throw;
      } catch (const NumericError& e) {
        throw TrainingError("training failed at " + where + ": " + e.what());
      }
      if (!std::isfinite(batch_loss_sum)) {
        throw TrainingError("training loss is not finite at " + where);
      }
      apply_step(trainable, lrs, optimizer, adam);
      epoch_loss_sum += batch_loss_sum;
    }
    if (losses_out) losses_out->push_back(epoch_loss_sum / n);
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (pretrain_epochs < 1) {
    throw ValidationError("TrainConfig: pretrain_epochs must be >= 1, got " +
                          std::to_string(pretrain_epochs));
  }
  if (finetune_epochs < 1) {
    throw ValidationError("TrainConfig: finetune_epochs must be >= 1, got " +
                          std::to_string(finetune_epochs));
  }
  if (!(pretrain_lr > 0.0) || !(finetune_lr > 0.0) || !(finetune_nonlocal_lr > 0.0)) {
    throw ValidationError("TrainConfig: learning rates must be > 0");
  }
  if (!(decay_factor >= 1.0)) {
    throw ValidationError("TrainConfig: decay_factor must be >= 1, got " +
                          std::to_string(decay_factor));
  }
  if (decay_period < 1) {
    throw ValidationError("TrainConfig: decay_period must be >= 1, got " +
                          std::to_string(decay_period));
  }
  if (batch_size < 1) {
    throw ValidationError("TrainConfig: batch_size must be >= 1, got " +
                          std::to_string(batch_size));
  }
  if (epoch_cap < 1) {
    throw ValidationError("TrainConfig: epoch_cap must be >= 1, got " + std::to_string(epoch_cap));
  }
  check_optimizer_name(pretrain_optimizer, "pretrain_optimizer");
  check_optimizer_name(finetune_optimizer, "finetune_optimizer");
}

double scheduled_lr(double lr0, int epoch, double factor, int period) {
  if (epoch < 0) throw ValidationError("scheduled_lr: epoch must be >= 0");
  if (period < 1) throw ValidationError("scheduled_lr: period must be >= 1");
  return lr0 / std::pow(factor, static_cast<double>(epoch / period));
}

ModelParams train_model(const std::vector<const Clip*>& labeled, const EncoderConfig& enc_cfg,
                        const TrainConfig& cfg, TrainReport* report, const ModelParams* warm_from) {
  enc_cfg.validate();
  cfg.validate();
  if (labeled.empty()) throw ValidationError("train_model: labeled set is empty");

  std::vector<const Clip*> clips = labeled;
  for (const Clip* c : clips) {
    if (!c) throw ValidationError("train_model: null clip in labeled set");
    if (c->features.rows() != enc_cfg.dim || c->features.cols() != enc_cfg.clip_len) {
      throw DimensionError("train_model: clip " + c->id.str() + " features are " +
                           c->features.shape_str() + ", expected " + std::to_string(enc_cfg.dim) +
                           " x " + std::to_string(enc_cfg.clip_len));
    }
    if (c->label < 0 || c->label >= enc_cfg.num_phases) {
      throw ValidationError("train_model: clip " + c->id.str() + " label " +
                            std::to_string(c->label) + " outside [0, " +
                            std::to_string(enc_cfg.num_phases) + ")");
    }
  }
  // Internal canonical order makes the result independent of caller order.
  std::sort(clips.begin(), clips.end(), [](const Clip* a, const Clip* b) { return a->id < b->id; });
  for (std::size_t i = 1; i < clips.size(); ++i) {
    if (clips[i]->id == clips[i - 1]->id) {
      throw ValidationError("train_model: duplicate clip " + clips[i]->id.str());
    }
  }

  ModelParams params = ModelParams::init(enc_cfg, cfg.seed);
  if (warm_from) {
    const EncoderConfig& w = warm_from->cfg;
    if (w.dim != enc_cfg.dim || w.hidden != enc_cfg.hidden || w.clip_len != enc_cfg.clip_len ||
        w.num_phases != enc_cfg.num_phases) {
      throw ValidationError("train_model: warm-start weights were built for a different encoder");
    }
    std::vector<Param*> dst = params.all();
    std::vector<const Param*> src = static_cast<const ModelParams*>(warm_from)->all();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i]->value = src[i]->value;
  }

  const int e1 = std::min(cfg.pretrain_epochs, cfg.epoch_cap);
  const int e2 = std::min(cfg.finetune_epochs, cfg.epoch_cap);

  std::vector<Param*> backbone = params.backbone_params();
  std::vector<double> lrs1(backbone.size(), cfg.pretrain_lr);
  std::vector<double>* s1 = report ? &report->stage1_losses : nullptr;
  if (s1) s1->clear();
  run_stage(1, clips, params, backbone, lrs1, cfg.pretrain_optimizer, e1, false, cfg,
            seed_mix(cfg.seed, 1), s1);

  std::vector<Param*> all = params.all();
  std::vector<double> lrs2;
  lrs2.assign(backbone.size(), cfg.finetune_lr);
  lrs2.resize(all.size(), cfg.finetune_nonlocal_lr);
  std::vector<double>* s2 = report ? &report->stage2_losses : nullptr;
  if (s2) s2->clear();
  run_stage(2, clips, params, all, lrs2, cfg.finetune_optimizer, e2, true, cfg,
            seed_mix(cfg.seed, 2), s2);

  return params;
}

std::vector<int> predict_video(ModelParams& params, const Video& video, bool use_nonlocal) {
  const int T = params.cfg.clip_len;
  if (video.num_frames() < T) {
    throw ValidationError("predict_video: video " + video.id + " has " +
                          std::to_string(video.num_frames()) + " frames, needs at least " +
                          std::to_string(T));
  }
  std::vector<Clip> clips = make_clips(video, T);
  std::vector<int> preds(static_cast<std::size_t>(video.num_frames()), 0);
  for (const Clip& clip : clips) {
    preds[static_cast<std::size_t>(clip.id.end_frame)] =
        predict_label(params, clip.features, use_nonlocal);
  }
  for (int t = 0; t < T - 1; ++t) preds[static_cast<std::size_t>(t)] = preds[T - 1];
  return preds;
}

std::vector<VideoMetrics> evaluate_videos(ModelParams& params, const Dataset& data,
                                          const std::vector<std::string>& video_ids,
                                          bool use_nonlocal) {
  std::set<std::string> seen;
  std::vector<VideoMetrics> out;
  out.reserve(video_ids.size());
  for (const std::string& id : video_ids) {
    if (!seen.insert(id).second) {
      throw ValidationError("evaluate_videos: duplicate video id " + id);
    }
    const Video* video = data.find_video(id);
    if (!video) throw ValidationError("evaluate_videos: unknown video id " + id);
    std::vector<int> preds = predict_video(params, *video, use_nonlocal);
    std::vector<int> gt;
    gt.reserve(video->frames.size());
    for (const FrameRecord& f : video->frames) gt.push_back(f.phase);
    out.push_back(eval_video(gt, preds));
  }
  return out;
}

}  // namespace lrtd
