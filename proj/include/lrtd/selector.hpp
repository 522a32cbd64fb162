#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "lrtd/dataset.hpp"
#include "lrtd/model.hpp"
#include "lrtd/nonlocal.hpp"
#include "lrtd/pool.hpp"

namespace lrtd {

enum class Strategy { lrtd, random, entropy_mean, entropy_max, emb_dot };

Strategy parse_strategy(const std::string& name);
std::string to_string(Strategy s);

struct ClipScore {
  ClipId clip_id;
  double score = 0.0;
  Strategy strategy = Strategy::lrtd;
};

struct SelectionConfig {
  int top_n = 5;                 // dependency entries averaged into a clip score
  double batch_fraction = 0.10;  // fraction of all clips selected per round
  Strategy strategy = Strategy::lrtd;
  MatrixMode matrix_mode = MatrixMode::raw;
  int mc_passes = 8;  // stochastic forward passes for entropy strategies
  void validate() const;
};

// Mean of the top_n largest entries of the dependency matrix.
double lrtd_score(const DependencyMatrix& m, int top_n);

// The batch_size lowest-score clips, ties broken by clip id. Scores must
// cover the unlabeled pool exactly; the result is ordered by selection rank.
std::vector<ClipScore> select_batch(const PoolState& pool, const std::vector<ClipScore>& scores,
                                    int batch_size);

// Scores every clip under the configured strategy. Lower score = more
// selectable for every strategy; entropy values are negated accordingly.
// Stochastic strategies draw from a per-clip generator seeded off the clip
// id, so scores do not depend on evaluation order.
std::vector<ClipScore> score_pool(ModelParams& model, const std::vector<const Clip*>& unlabeled,
                                  const SelectionConfig& cfg, std::uint64_t seed);

void write_scores_tsv(const std::string& path, int round, const std::vector<ClipScore>& scores,
                      const std::set<ClipId>& selected);

}  // namespace lrtd
