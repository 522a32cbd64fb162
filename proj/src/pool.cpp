#include "lrtd/pool.hpp"

#include <algorithm>
#include <cmath>

#include "lrtd/errors.hpp"
#include "lrtd/rng.hpp"

namespace lrtd {

void PoolState::mark_labeled(const std::vector<std::pair<ClipId, double>>& picks,
                             const std::string& strategy) {
  for (const auto& [id, score] : picks) {
    auto it = unlabeled.find(id);
    if (it == unlabeled.end()) {
      throw ValidationError("mark_labeled: clip '" + id.str() + "' is not in the unlabeled pool");
    }
    unlabeled.erase(it);
    labeled.insert(id);
  }
  SelectionRecord rec;
  rec.round = round;
  rec.strategy = strategy;
  rec.selected = picks;
  history.push_back(std::move(rec));
}

void PoolState::check_invariants(std::size_t expected_total) const {
  if (labeled.size() + unlabeled.size() != expected_total) {
    throw ValidationError("pool partition lost clips: " + std::to_string(labeled.size()) + " + " +
                          std::to_string(unlabeled.size()) +
                          " != " + std::to_string(expected_total));
  }
  for (const ClipId& id : labeled) {
    if (unlabeled.count(id)) {
      throw ValidationError("pool partition overlap at clip '" + id.str() + "'");
    }
  }
}

PoolState init_pool(const std::vector<Clip>& clips, double init_fraction, std::uint64_t seed) {
  if (clips.empty()) throw ValidationError("init_pool: empty clip list");
  if (!(init_fraction > 0.0 && init_fraction < 1.0)) {
    throw ValidationError("init_pool: init_fraction must be in (0, 1)");
  }
  std::vector<ClipId> ids;
  ids.reserve(clips.size());
  for (const Clip& c : clips) ids.push_back(c.id);
  std::sort(ids.begin(), ids.end());
  for (std::size_t i = 1; i < ids.size(); ++i) {
    if (ids[i] == ids[i - 1]) {
      throw ValidationError("init_pool: duplicate clip id '" + ids[i].str() + "'");
    }
  }

  const int n = static_cast<int>(ids.size());
  const int k = static_cast<int>(std::lround(init_fraction * n));
  Rng rng(seed);
  std::vector<int> picks = rng.sample_without_replacement(n, k);

  PoolState pool;
  std::vector<bool> taken(ids.size(), false);
  for (int p : picks) taken[p] = true;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (taken[i]) {
      pool.labeled.insert(ids[i]);
    } else {
      pool.unlabeled.insert(ids[i]);
    }
  }
  return pool;
}

}  // namespace lrtd
