#include "lrtd/synthetic.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>

#include "lrtd/errors.hpp"
#include "lrtd/rng.hpp"

namespace lrtd {

namespace {

using nlohmann::json;

double quantize_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

std::string video_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "video_%03d", i);
  return buf;
}

std::vector<std::vector<double>> default_prototypes(const SyntheticSpec& spec) {
  Rng rng(seed_mix(spec.seed, hash_str("prototypes")));
  std::vector<std::vector<double>> protos(spec.num_phases);
  for (int p = 0; p < spec.num_phases; ++p) {
    std::vector<double>& mu = protos[p];
    mu.resize(spec.dim);
    double norm = 0.0;
    for (double& v : mu) {
      v = rng.normal();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm < 1e-12) norm = 1.0;
    for (double& v : mu) v = v / norm * spec.proto_scale;
  }
  return protos;
}

// Durations: every included phase gets at least one frame, the rest split
// proportionally to random weights.
std::vector<int> plan_durations(Rng& rng, int frames, int num_segments) {
  std::vector<double> w(num_segments);
  double total = 0.0;
  for (double& v : w) {
    v = 0.5 + rng.uniform();
    total += v;
  }
  std::vector<int> d(num_segments, 1);
  int assigned = num_segments;
  for (int i = 0; i < num_segments; ++i) {
    const int extra = static_cast<int>(std::floor((frames - num_segments) * w[i] / total));
    d[i] += extra;
    assigned += extra;
  }
  for (int i = 0; assigned < frames; i = (i + 1) % num_segments) {
    ++d[i];
    ++assigned;
  }
  return d;
}

}  // namespace

void SyntheticSpec::validate() const {
  auto fail = [](const std::string& msg) { throw ValidationError("synthetic spec: " + msg); };
  if (num_videos < 1) fail("num_videos must be >= 1");
  if (frames_min < 1) fail("frames_min must be >= 1");
  if (frames_max < frames_min) fail("frames_max must be >= frames_min");
  if (dim < 1) fail("dim must be >= 1");
  if (num_phases < 1) fail("num_phases must be >= 1");
  if (!(proto_scale > 0.0)) fail("proto_scale must be > 0");
  if (!(skip_prob >= 0.0 && skip_prob < 1.0)) fail("skip_prob must be in [0, 1)");
  if (!(rho >= 0.0 && rho < 1.0)) fail("rho must be in [0, 1)");
  if (!(p_noise >= 0.0 && p_noise < 1.0)) fail("p_noise must be in [0, 1)");
  if (!(outlier_scale >= 0.0)) fail("outlier_scale must be >= 0");
  if (!(feature_noise >= 0.0)) fail("feature_noise must be >= 0");
  if (!prototypes.empty()) {
    if (static_cast<int>(prototypes.size()) != num_phases) {
      fail("prototypes must have num_phases entries");
    }
    for (const auto& mu : prototypes) {
      if (static_cast<int>(mu.size()) != dim) fail("each prototype must have dim entries");
    }
  }
  if (frames_min < num_phases) fail("frames_min must be >= num_phases so every phase fits");
}

SyntheticSpec parse_synthetic_spec(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("synthetic spec: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("synthetic spec: top level must be an object");

  static const std::set<std::string> known = {
      "num_videos",    "frames_min", "frames_max", "dim",     "num_phases",
      "proto_scale",   "skip_prob",  "rho",        "p_noise", "outlier_scale",
      "feature_noise", "seed",       "prototypes"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ValidationError("synthetic spec: unknown key '" + key + "'");
  }

  SyntheticSpec spec;
  try {
    if (j.contains("num_videos")) spec.num_videos = j["num_videos"].get<int>();
    if (j.contains("frames_min")) spec.frames_min = j["frames_min"].get<int>();
    if (j.contains("frames_max")) spec.frames_max = j["frames_max"].get<int>();
    if (j.contains("dim")) spec.dim = j["dim"].get<int>();
    if (j.contains("num_phases")) spec.num_phases = j["num_phases"].get<int>();
    if (j.contains("proto_scale")) spec.proto_scale = j["proto_scale"].get<double>();
    if (j.contains("skip_prob")) spec.skip_prob = j["skip_prob"].get<double>();
    if (j.contains("rho")) spec.rho = j["rho"].get<double>();
    if (j.contains("p_noise")) spec.p_noise = j["p_noise"].get<double>();
    if (j.contains("outlier_scale")) spec.outlier_scale = j["outlier_scale"].get<double>();
    if (j.contains("feature_noise")) spec.feature_noise = j["feature_noise"].get<double>();
    if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("prototypes")) {
      spec.prototypes = j["prototypes"].get<std::vector<std::vector<double>>>();
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("synthetic spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

std::string synthetic_spec_to_json(const SyntheticSpec& spec) {
  json j;
  j["num_videos"] = spec.num_videos;
  j["frames_min"] = spec.frames_min;
  j["frames_max"] = spec.frames_max;
  j["dim"] = spec.dim;
  j["num_phases"] = spec.num_phases;
  j["proto_scale"] = spec.proto_scale;
  j["skip_prob"] = spec.skip_prob;
  j["rho"] = spec.rho;
  j["p_noise"] = spec.p_noise;
  j["outlier_scale"] = spec.outlier_scale;
  j["feature_noise"] = spec.feature_noise;
  j["seed"] = spec.seed;
  j["prototypes"] = spec.prototypes.empty() ? json(json::array()) : json(spec.prototypes);
  return j.dump(2) + "\n";
}

Dataset gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const auto protos = spec.prototypes.empty() ? default_prototypes(spec) : spec.prototypes;

  Dataset ds;
  ds.dim = spec.dim;
  ds.num_phases = spec.num_phases;
  for (int vi = 0; vi < spec.num_videos; ++vi) {
    Video video;
    video.id = video_name(vi);
    Rng rng(seed_mix(spec.seed, hash_str(video.id)));

    const int F =
        spec.frames_min + static_cast<int>(rng.below(spec.frames_max - spec.frames_min + 1));

    // Phase 0 always present; later phases dropped with skip_prob.
    std::vector<int> phases_here{0};
    for (int p = 1; p < spec.num_phases; ++p) {
      if (rng.uniform() >= spec.skip_prob) phases_here.push_back(p);
    }
    const std::vector<int> durations = plan_durations(rng, F, static_cast<int>(phases_here.size()));

    std::vector<int> frame_phase;
    frame_phase.reserve(F);
    for (std::size_t s = 0; s < phases_here.size(); ++s) {
      frame_phase.insert(frame_phase.end(), durations[s], phases_here[s]);
    }

    std::vector<double> state(spec.dim, 0.0);
    video.frames.resize(F);
    for (int t = 0; t < F; ++t) {
      FrameRecord& fr = video.frames[t];
      fr.frame_index = t;
      fr.phase = frame_phase[t];
      fr.feature.resize(spec.dim);
      const bool outlier = rng.uniform() < spec.p_noise;
      fr.outlier = outlier;
      const std::vector<double>& mu = protos[fr.phase];
      for (int d = 0; d < spec.dim; ++d) {
        const double draw = rng.normal();
        double v;
        if (outlier) {
          v = spec.outlier_scale * draw;
        } else if (t == 0) {
          v = mu[d] + spec.feature_noise * draw;
        } else {
          v = spec.rho * state[d] + (1.0 - spec.rho) * mu[d] + spec.feature_noise * draw;
        }
        v = quantize_f32(v);
        fr.feature[d] = v;
        state[d] = v;
      }
    }
    ds.videos.push_back(std::move(video));
  }
  return ds;
}

Dataset gen_synthetic_files(const SyntheticSpec& spec, const std::string& out_dir) {
  Dataset ds = gen_synthetic(spec);
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  write_features((dir / "features.bin").string(), ds);
  write_annotations((dir / "annotations.tsv").string(), ds);
  std::ofstream echo(dir / "spec.echo.json", std::ios::binary);
  if (!echo) throw IoError("cannot write spec echo in '" + out_dir + "'");
  echo << synthetic_spec_to_json(spec);
  return ds;
}

}  // namespace lrtd
