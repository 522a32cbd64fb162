#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lrtd/dataset.hpp"

namespace lrtd {

// Partition of all clips into annotated and unannotated sets, with the
// per-round selection history. The two sets always partition the full pool.
struct PoolState {
  struct SelectionRecord {
    int round = 0;
    std::string strategy;
    std::vector<std::pair<ClipId, double>> selected;  // (id, score)
  };

  std::set<ClipId> labeled;
  std::set<ClipId> unlabeled;
  int round = 0;
  std::vector<SelectionRecord> history;

  std::size_t total() const { return labeled.size() + unlabeled.size(); }

  // Moves ids from unlabeled to labeled and appends a history record.
  void mark_labeled(const std::vector<std::pair<ClipId, double>>& picks,
                    const std::string& strategy);

  // Throws ValidationError if the partition invariant is broken.
  void check_invariants(std::size_t expected_total) const;
};

// Draws round(init_fraction * N) clips uniformly without replacement.
PoolState init_pool(const std::vector<Clip>& clips, double init_fraction, std::uint64_t seed);

}  // namespace lrtd
