#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lrtd/alloop.hpp"

namespace lrtd {

// One JSON document drives a whole experiment: where the data lives, how the
// pool is split, and every config knob. Unknown keys are rejected; the echo
// written next to the outputs has all defaults filled in. The encoder's
// feature dim is not a manifest field: it comes from the feature file.
struct Manifest {
  std::string features;
  std::string annotations;
  int num_phases = 7;
  Split split;
  ExperimentConfig cfg;
  std::vector<Strategy> strategies;  // compare runs; empty elsewhere
  std::vector<std::uint64_t> seeds;  // compare runs; defaults to {cfg.seed}

  void validate() const;
};

Manifest parse_manifest(const std::string& json_text);
std::string manifest_to_json(const Manifest& m);

// Reads and parses the file; relative dataset paths are resolved against the
// manifest's own directory.
Manifest load_manifest_file(const std::string& path);

}  // namespace lrtd
