#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lrtd/dataset.hpp"

namespace lrtd {

// Parameters of the synthetic dataset generator. Each video walks the phases
// in order (some optionally skipped), with AR(1) features pulled toward the
// active phase prototype:
//   x_t = rho * x_{t-1} + (1 - rho) * mu_phase + eps,  eps ~ N(0, feature_noise^2 I)
// With probability p_noise a frame is replaced by a low-magnitude outlier draw
// N(0, outlier_scale^2 I), which then feeds the recursion as x_{t-1}.
// Generation is a pure function of the spec; all emitted values are quantized
// to float32 so the files round-trip exactly.
struct SyntheticSpec {
  int num_videos = 20;
  int frames_min = 180;
  int frames_max = 220;
  int dim = 16;
  int num_phases = 7;
  double proto_scale = 3.0;
  double skip_prob = 0.0;
  double rho = 0.7;
  double p_noise = 0.0;
  double outlier_scale = 0.1;
  double feature_noise = 0.05;
  std::uint64_t seed = 0;
  // Optional explicit prototypes (num_phases x dim); derived from the seed
  // with norm proto_scale when empty.
  std::vector<std::vector<double>> prototypes;

  void validate() const;
};

// Parses and validates a spec JSON document; unknown keys are rejected.
SyntheticSpec parse_synthetic_spec(const std::string& json_text);
std::string synthetic_spec_to_json(const SyntheticSpec& spec);

Dataset gen_synthetic(const SyntheticSpec& spec);

// Writes features.bin, annotations.tsv, and the materialized spec echo into
// out_dir. Returns the generated dataset.
Dataset gen_synthetic_files(const SyntheticSpec& spec, const std::string& out_dir);

}  // namespace lrtd
