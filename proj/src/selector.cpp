#include "lrtd/selector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>

#include "lrtd/errors.hpp"
#include "lrtd/rng.hpp"
#include "lrtd/text.hpp"

namespace lrtd {

Strategy parse_strategy(const std::string& name) {
  if (name == "lrtd") return Strategy::lrtd;
  if (name == "random") return Strategy::random;
  if (name == "entropy_mean") return Strategy::entropy_mean;
  if (name == "entropy_max") return Strategy::entropy_max;
  if (name == "emb_dot") return Strategy::emb_dot;
  throw ValidationError("unknown strategy '" + name +
                        "' (expected lrtd, random, entropy_mean, entropy_max or emb_dot)");
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::lrtd:
      return "lrtd";
    case Strategy::random:
      return "random";
    case Strategy::entropy_mean:
      return "entropy_mean";
    case Strategy::entropy_max:
      return "entropy_max";
    case Strategy::emb_dot:
      return "emb_dot";
  }
  throw ValidationError("invalid strategy value");
}

void SelectionConfig::validate() const {
  if (top_n < 1) throw ValidationError("top_n must be >= 1");
  if (!(batch_fraction > 0.0) || batch_fraction > 1.0)
    throw ValidationError("batch_fraction must be in (0, 1]");
  if (mc_passes < 1) throw ValidationError("mc_passes must be >= 1");
}

double lrtd_score(const DependencyMatrix& m, int top_n) {
  if (m.values.size() == 0) throw ValidationError("lrtd_score: empty dependency matrix");
  if (top_n < 1) throw ValidationError("lrtd_score: top_n must be >= 1");
  std::vector<double> entries(m.values.data());
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(top_n), entries.size());
  std::partial_sort(entries.begin(), entries.begin() + k, entries.end(), std::greater<>());
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += entries[i];
  return sum / static_cast<double>(k);
}

std::vector<ClipScore> select_batch(const PoolState& pool, const std::vector<ClipScore>& scores,
                                    int batch_size) {
  if (batch_size < 0) throw ValidationError("select_batch: batch size must be >= 0");
  if (static_cast<std::size_t>(batch_size) > pool.unlabeled.size())
    throw ValidationError("select_batch: batch size " + std::to_string(batch_size) +
                          " exceeds unlabeled pool size " + std::to_string(pool.unlabeled.size()));
  std::set<ClipId> seen;
  for (const ClipScore& s : scores) {
    if (!std::isfinite(s.score))
      throw NumericError("select_batch: non-finite score for clip '" + s.clip_id.str() + "'");
    if (pool.unlabeled.find(s.clip_id) == pool.unlabeled.end())
      throw ValidationError("select_batch: score for clip '" + s.clip_id.str() +
                            "' which is not in the unlabeled pool");
    if (!seen.insert(s.clip_id).second)
      throw ValidationError("select_batch: duplicate score for clip '" + s.clip_id.str() + "'");
  }
  if (seen.size() != pool.unlabeled.size())
    for (const ClipId& id : pool.unlabeled)
      if (seen.find(id) == seen.end())
        throw ValidationError("select_batch: missing score for unlabeled clip '" + id.str() + "'");

  std::vector<ClipScore> order = scores;
  std::sort(order.begin(), order.end(), [](const ClipScore& a, const ClipScore& b) {
    if (a.score != b.score) return a.score < b.score;
    return a.clip_id < b.clip_id;
  });
  order.resize(static_cast<std::size_t>(batch_size));
  return order;
}

std::vector<ClipScore> score_pool(ModelParams& model, const std::vector<const Clip*>& unlabeled,
                                  const SelectionConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::vector<ClipScore> out;
  out.reserve(unlabeled.size());
  for (const Clip* clip : unlabeled) {
    const std::uint64_t clip_seed = seed_mix(seed, hash_str(clip->id.str()));
    double score = 0.0;
    switch (cfg.strategy) {
      case Strategy::lrtd: {
        Tensor h = encode_tensor(model, clip->features);
        DependencyMatrix m =
            dependency_matrix(h, model.w_theta.value, model.w_phi.value, cfg.matrix_mode);
        score = lrtd_score(m, cfg.top_n);
        break;
      }
      case Strategy::random:
        score = Rng(clip_seed).uniform();
        break;
      case Strategy::entropy_mean:
      case Strategy::entropy_max: {
        std::vector<double> ent = frame_entropies(model, clip->features, cfg.mc_passes,
                                                  model.cfg.dropout, clip_seed, true);
        double v = 0.0;
        if (cfg.strategy == Strategy::entropy_mean) {
          for (double e : ent) v += e;
          v /= static_cast<double>(ent.size());
        } else {
          v = *std::max_element(ent.begin(), ent.end());
        }
        score = -v;
        break;
      }
      case Strategy::emb_dot: {
        Tensor h = encode_tensor(model, clip->features);
        score = lrtd_score(DependencyMatrix{dot_product_matrix(h), MatrixMode::raw}, cfg.top_n);
        break;
      }
    }
    if (!std::isfinite(score))
      throw NumericError("score_pool: non-finite score for clip '" + clip->id.str() + "'");
    out.push_back(ClipScore{clip->id, score, cfg.strategy});
  }
  return out;
}

void write_scores_tsv(const std::string& path, int round, const std::vector<ClipScore>& scores,
                      const std::set<ClipId>& selected) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "round\tstrategy\tclip_id\tscore\tselected\n";

  for (const ClipScore& s : scores) {
    out << round << '\t' << to_string(s.strategy) << '\t' << s.clip_id.str() << '\t'
        << fmt_double(s.score) << '\t' << (selected.count(s.clip_id) ? 1 : 0) << '\n';
  }
  if (!out) throw IoError("failed while writing '" + path + "'");
}

}  // namespace lrtd
