#include "lrtd/alloop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <ostream>
#include <set>

#include "lrtd/errors.hpp"
#include "lrtd/pool.hpp"
#include "lrtd/rng.hpp"
#include "lrtd/stats.hpp"
#include "lrtd/text.hpp"

namespace lrtd {

namespace {

// Independent seed streams derived from the experiment seed. None of them
// involve the strategy, so runs with a shared seed share the initial pool,
// the round-0 model, and the per-clip scoring streams.
constexpr std::uint64_t kInitStream = 0x11;
constexpr std::uint64_t kTrainStream = 0x22;
constexpr std::uint64_t kScoreStream = 0x33;

// Budget fractions live on a nominal grid (0.1, 0.2, ...); snapping to 1e-6
// keeps accumulated float error out of reports and curve grouping.
double snap_fraction(double f) { return std::round(f * 1e6) / 1e6; }

void check_split_list(const Dataset& data, const std::vector<std::string>& ids, const char* name) {
  std::set<std::string> seen;
  for (const std::string& id : ids) {
    if (!seen.insert(id).second) {
      throw ValidationError(std::string(name) + " videos: duplicate id '" + id + "'");
    }
    if (!data.find_video(id)) {
      throw ValidationError(std::string(name) + " videos: unknown id '" + id + "'");
    }
  }
}

void check_disjoint(const std::vector<std::string>& a, const std::vector<std::string>& b,
                    const char* what) {
  std::set<std::string> sa(a.begin(), a.end());
  for (const std::string& id : b) {
    if (sa.count(id)) {
      throw ValidationError(std::string("video '") + id + "' appears in both " + what);
    }
  }
}

void validate_split(const Dataset& data, const Split& split, const StopRule& stop) {
  if (split.train_videos.empty()) throw ValidationError("split: train video list is empty");
  if (split.test_videos.empty()) throw ValidationError("split: test video list is empty");
  check_split_list(data, split.train_videos, "train");
  check_split_list(data, split.test_videos, "test");
  check_split_list(data, split.val_videos, "validation");
  check_disjoint(split.train_videos, split.test_videos, "train and test splits");
  check_disjoint(split.train_videos, split.val_videos, "train and validation splits");
  check_disjoint(split.test_videos, split.val_videos, "test and validation splits");
  if (stop.mode == StopMode::significance && stop.split == "validation" &&
      split.val_videos.empty()) {
    throw ValidationError("significance stop on the validation split needs validation videos");
  }
}

std::vector<double> split_accuracies(ModelParams& params, const Dataset& data,
                                     const std::vector<std::string>& ids) {
  std::vector<VideoMetrics> per_video = evaluate_videos(params, data, ids, true);
  std::vector<double> accs;
  accs.reserve(per_video.size());
  for (const VideoMetrics& m : per_video) accs.push_back(m.acc);
  return accs;
}

void write_selected_tsv(const std::string& path, const std::vector<ClipId>& ids) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << "clip_id\n";
  for (const ClipId& id : ids) os << id.str() << "\n";
  if (!os) throw IoError("failed writing '" + path + "'");
}

struct MeanStd {
  double mean = 0.0;
  double std_dev = 0.0;
};

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd r;
  if (values.empty()) return r;
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); })) {
    r.mean = values.front();
    return r;
  }
  for (double v : values) r.mean += v;
  r.mean /= values.size();
  double acc = 0.0;
  for (double v : values) acc += (v - r.mean) * (v - r.mean);
  r.std_dev = std::sqrt(acc / values.size());
  return r;
}

}  // namespace

StopMode parse_stop_mode(const std::string& s) {
  if (s == "fixed_budget") return StopMode::fixed_budget;
  if (s == "significance") return StopMode::significance;
  throw ValidationError("unknown stop mode '" + s + "' (expected fixed_budget or significance)");
}

std::string to_string(StopMode m) {
  return m == StopMode::fixed_budget ? "fixed_budget" : "significance";
}

void StopRule::validate() const {
  if (!(max_fraction > 0.0 && max_fraction <= 1.0)) {
    throw ValidationError("StopRule: max_fraction must be in (0, 1], got " +
                          std::to_string(max_fraction));
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("StopRule: alpha must be in (0, 1), got " + std::to_string(alpha));
  }
  if (split != "test" && split != "validation") {
    throw ValidationError("StopRule: split must be \"test\" or \"validation\", got \"" + split +
                          "\"");
  }
}

void ExperimentConfig::validate() const {
  encoder.validate();
  train.validate();
  selection.validate();
  stop.validate();
  if (!(init_fraction > 0.0 && init_fraction < 1.0)) {
    throw ValidationError("ExperimentConfig: init_fraction must be in (0, 1), got " +
                          std::to_string(init_fraction));
  }
  if (threads < 1) {
    throw ValidationError("ExperimentConfig: threads must be >= 1, got " + std::to_string(threads));
  }
}

std::vector<double> Evaluator::validation_accuracies(int, ModelParams&) {
  throw ValidationError("this evaluator has no validation split");
}

EvalResult SplitEvaluator::evaluate(int, ModelParams& params) {
  std::vector<VideoMetrics> per_video = evaluate_videos(params, data_, split_.test_videos, true);
  EvalResult r;
  r.per_video_acc.reserve(per_video.size());
  for (const VideoMetrics& m : per_video) r.per_video_acc.push_back(m.acc);
  r.aggregate = aggregate(per_video);
  return r;
}

std::vector<double> SplitEvaluator::validation_accuracies(int, ModelParams& params) {
  if (split_.val_videos.empty()) {
    throw ValidationError("validation accuracies requested but the validation split is empty");
  }
  return split_accuracies(params, data_, split_.val_videos);
}

std::vector<RoundRecord> run_active_learning(const Dataset& data, const Split& split,
                                             const ExperimentConfig& cfg,
                                             const std::string& out_dir,
                                             AnnotationProvider* annotator, Evaluator* evaluator,
                                             std::ostream* log) {
  cfg.validate();
  validate_split(data, split, cfg.stop);

  std::vector<Clip> pool_clips = make_clips(data, split.train_videos, cfg.encoder.clip_len);
  if (pool_clips.empty()) {
    throw ValidationError("train split produced no clips (videos shorter than the clip length?)");
  }
  const long long n_total = static_cast<long long>(pool_clips.size());

  std::map<ClipId, const Clip*> by_id;
  for (const Clip& c : pool_clips) by_id[c.id] = &c;
  if (static_cast<long long>(by_id.size()) != n_total) {
    throw ValidationError("train split contains duplicate clip ids");
  }

  OracleAnnotator oracle;
  if (!annotator) annotator = &oracle;
  SplitEvaluator default_eval(data, split);
  if (!evaluator) evaluator = &default_eval;

  const std::string strategy_name = to_string(cfg.selection.strategy);
  const double batch_fraction = cfg.selection.batch_fraction;
  auto target_count = [&](int r) {
    long long t = std::llround((cfg.init_fraction + r * batch_fraction) * n_total);
    return std::clamp(t, 0LL, n_total);
  };

  PoolState pool = init_pool(pool_clips, cfg.init_fraction, seed_mix(cfg.seed, kInitStream));
  if (static_cast<long long>(pool.labeled.size()) != target_count(0)) {
    throw ValidationError("internal: initial pool size does not match the budget target");
  }

  std::map<ClipId, int> labels;
  auto annotate = [&](const std::vector<ClipId>& ids) {
    for (const ClipId& id : ids) labels[id] = annotator->label_of(*by_id.at(id));
  };
  std::vector<ClipId> init_ids(pool.labeled.begin(), pool.labeled.end());
  annotate(init_ids);

  if (!out_dir.empty()) std::filesystem::create_directories(out_dir + "/rounds");
  if (log) {
    *log << "strategy " << strategy_name << ", seed " << cfg.seed << ", pool " << n_total
         << " clips from " << split.train_videos.size() << " train videos, "
         << split.test_videos.size() << " test videos\n";
  }

  std::vector<RoundRecord> records;
  ModelParams params;
  std::vector<double> prev_stop_accs;
  std::vector<ClipScore> pending_scores;
  std::vector<ClipId> pending_selected = init_ids;

  const double eps = 1e-9;
  int r = 0;
  while (true) {
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<Clip> train_clips;
    train_clips.reserve(pool.labeled.size());
    for (const ClipId& id : pool.labeled) {
      Clip c = *by_id.at(id);
      c.label = labels.at(id);
      train_clips.push_back(std::move(c));
    }
    std::vector<const Clip*> train_ptrs;
    train_ptrs.reserve(train_clips.size());
    for (const Clip& c : train_clips) train_ptrs.push_back(&c);

    TrainConfig round_cfg = cfg.train;
    round_cfg.seed = seed_mix(seed_mix(cfg.seed, kTrainStream), static_cast<std::uint64_t>(r));
    ModelParams trained = train_model(train_ptrs, cfg.encoder, round_cfg, nullptr,
                                      (cfg.warm_start && r > 0) ? &params : nullptr);
    params = std::move(trained);

    EvalResult ev = evaluator->evaluate(r, params);
    std::vector<double> stop_accs = (cfg.stop.split == "validation")
                                        ? evaluator->validation_accuracies(r, params)
                                        : ev.per_video_acc;

    RoundRecord rec;
    rec.round = r;
    rec.labeled_fraction = snap_fraction(cfg.init_fraction + r * batch_fraction);
    rec.selected = pending_selected;
    rec.test_accuracies = ev.per_video_acc;
    rec.metrics = ev.aggregate;
    if (r > 0 && stop_accs.size() >= 2 && stop_accs.size() == prev_stop_accs.size()) {
      rec.p_vs_prev = paired_significance(stop_accs, prev_stop_accs);
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    records.push_back(rec);

    if (!out_dir.empty()) {
      const std::string dir = out_dir + "/rounds/round_" + std::to_string(r);
      std::filesystem::create_directories(dir);
      save_checkpoint(dir + "/checkpoint", params);
      write_metrics_json(dir + "/metrics.json", rec.metrics);
      write_selected_tsv(dir + "/selected.tsv", rec.selected);
      if (r > 0) {
        std::set<ClipId> sel(rec.selected.begin(), rec.selected.end());
        write_scores_tsv(dir + "/scores.tsv", r, pending_scores, sel);
      }
    }
    if (log) {
      *log << "round " << r << ": labeled " << pool.labeled.size() << "/" << n_total
           << " (fraction " << fmt_double(rec.labeled_fraction) << "), test acc "
           << fmt_double(rec.metrics.acc.mean) << ", wall " << fmt_double(rec.wall_seconds)
           << " s\n";
    }

    bool stop = false;
    if (cfg.stop.mode == StopMode::significance && rec.p_vs_prev &&
        *rec.p_vs_prev > cfg.stop.alpha) {
      if (log) {
        *log << "stopping: p " << fmt_double(*rec.p_vs_prev) << " > alpha "
             << fmt_double(cfg.stop.alpha) << "\n";
      }
      stop = true;
    }
    const double next_fraction = cfg.init_fraction + (r + 1) * batch_fraction;
    if (!stop && next_fraction > cfg.stop.max_fraction + eps) stop = true;
    const long long next_target = target_count(r + 1);
    if (!stop &&
        (next_target <= static_cast<long long>(pool.labeled.size()) || pool.unlabeled.empty())) {
      if (log) *log << "stopping: pool exhausted\n";
      stop = true;
    }
    if (stop) break;

    const int k = static_cast<int>(next_target - static_cast<long long>(pool.labeled.size()));
    std::vector<const Clip*> unlabeled_ptrs;
    unlabeled_ptrs.reserve(pool.unlabeled.size());
    for (const ClipId& id : pool.unlabeled) unlabeled_ptrs.push_back(by_id.at(id));
    std::vector<ClipScore> scores =
        score_pool(params, unlabeled_ptrs, cfg.selection,
                   seed_mix(seed_mix(cfg.seed, kScoreStream), static_cast<std::uint64_t>(r)));
    std::vector<ClipScore> picks = select_batch(pool, scores, k);

    pending_selected.clear();
    std::vector<std::pair<ClipId, double>> pick_pairs;
    pick_pairs.reserve(picks.size());
    for (const ClipScore& p : picks) {
      pending_selected.push_back(p.clip_id);
      pick_pairs.emplace_back(p.clip_id, p.score);
    }
    std::sort(pending_selected.begin(), pending_selected.end());
    annotate(pending_selected);
    pool.round = r + 1;
    pool.mark_labeled(pick_pairs, strategy_name);
    pool.check_invariants(static_cast<std::size_t>(n_total));
    pending_scores = std::move(scores);
    prev_stop_accs = std::move(stop_accs);
    ++r;
  }

  if (!out_dir.empty()) {
    write_summary_csv(out_dir + "/summary.csv", {{strategy_name, records}});
  }
  return records;
}

void write_summary_csv(const std::string& path,
                       const std::vector<std::pair<std::string, std::vector<RoundRecord>>>& runs) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << "strategy,round,fraction,accuracy,precision,recall,jaccard,f1,p_vs_prev\n";
  for (const auto& [strategy, records] : runs) {
    for (const RoundRecord& rec : records) {
      os << strategy << "," << rec.round << "," << fmt_double(rec.labeled_fraction) << ","
         << fmt_double(rec.metrics.acc.mean) << "," << fmt_double(rec.metrics.pr.mean) << ","
         << fmt_double(rec.metrics.re.mean) << "," << fmt_double(rec.metrics.ja.mean) << ","
         << fmt_double(rec.metrics.f1.mean) << ","
         << (rec.p_vs_prev ? fmt_double(*rec.p_vs_prev) : std::string()) << "\n";
    }
  }
  if (!os) throw IoError("failed writing '" + path + "'");
}

void CompareConfig::validate() const {
  base.validate();
  if (strategies.size() < 2) {
    throw ValidationError("compare needs at least two strategies, got " +
                          std::to_string(strategies.size()));
  }
  std::set<Strategy> us(strategies.begin(), strategies.end());
  if (us.size() != strategies.size()) throw ValidationError("compare: duplicate strategy");
  if (seeds.empty()) throw ValidationError("compare: seed list is empty");
  std::set<std::uint64_t> uss(seeds.begin(), seeds.end());
  if (uss.size() != seeds.size()) throw ValidationError("compare: duplicate seed");
}

CompareResult run_compare(const Dataset& data, const Split& split, const CompareConfig& cfg,
                          const std::string& out_dir, std::ostream* log) {
  cfg.validate();
  validate_split(data, split, cfg.base.stop);

  CompareResult result;
  for (Strategy strategy : cfg.strategies) {
    for (std::uint64_t seed : cfg.seeds) {
      ExperimentConfig run_cfg = cfg.base;
      run_cfg.selection.strategy = strategy;
      run_cfg.seed = seed;
      std::string run_dir;
      if (!out_dir.empty()) {
        run_dir = out_dir + "/" + to_string(strategy) + "/seed_" + std::to_string(seed);
        std::filesystem::create_directories(run_dir);
      }
      if (log) *log << "=== run: strategy " << to_string(strategy) << ", seed " << seed << "\n";
      result.runs[to_string(strategy)].push_back(
          run_active_learning(data, split, run_cfg, run_dir, nullptr, nullptr, log));
    }
  }

  // Rounds shared by every seed of a strategy feed the curve; rounds shared
  // by every run feed the pairwise comparison.
  std::map<std::string, std::size_t> strat_rounds;
  std::size_t common_rounds = SIZE_MAX;
  for (const auto& [name, seeds_runs] : result.runs) {
    std::size_t m = SIZE_MAX;
    for (const auto& records : seeds_runs) m = std::min(m, records.size());
    strat_rounds[name] = m;
    common_rounds = std::min(common_rounds, m);
  }

  const std::vector<std::pair<std::string, AggregateStat DatasetMetrics::*>> metric_fields = {
      {"accuracy", &DatasetMetrics::acc},
      {"precision", &DatasetMetrics::pr},
      {"recall", &DatasetMetrics::re},
      {"jaccard", &DatasetMetrics::ja},
      {"f1", &DatasetMetrics::f1}};

  for (const auto& [name, seeds_runs] : result.runs) {
    for (std::size_t r = 0; r < strat_rounds[name]; ++r) {
      for (const auto& [metric, field] : metric_fields) {
        std::vector<double> vals;
        vals.reserve(seeds_runs.size());
        for (const auto& records : seeds_runs) vals.push_back((records[r].metrics.*field).mean);
        MeanStd ms = mean_std(vals);
        result.curve.push_back(
            {seeds_runs.front()[r].labeled_fraction, metric, ms.mean, ms.std_dev, name});
      }
    }
  }

  if (out_dir.empty()) return result;

  write_curve_csv(out_dir + "/curve.csv", result.curve);

  // Cross-seed summary: metrics averaged over seeds; the p column is the
  // paired test between this round's and the previous round's pooled
  // per-video accuracies.
  std::vector<std::pair<std::string, std::vector<RoundRecord>>> summary_runs;
  for (const auto& [name, seeds_runs] : result.runs) {
    std::vector<RoundRecord> rows;
    for (std::size_t r = 0; r < strat_rounds[name]; ++r) {
      RoundRecord rec;
      rec.round = static_cast<int>(r);
      rec.labeled_fraction = seeds_runs.front()[r].labeled_fraction;
      for (const auto& [metric, field] : metric_fields) {
        std::vector<double> vals;
        for (const auto& records : seeds_runs) vals.push_back((records[r].metrics.*field).mean);
        (rec.metrics.*field).mean = mean_std(vals).mean;
      }
      if (r > 0) {
        std::vector<double> curr, prev;
        for (const auto& records : seeds_runs) {
          curr.insert(curr.end(), records[r].test_accuracies.begin(),
                      records[r].test_accuracies.end());
          prev.insert(prev.end(), records[r - 1].test_accuracies.begin(),
                      records[r - 1].test_accuracies.end());
        }
        if (curr.size() >= 2 && curr.size() == prev.size()) {
          rec.p_vs_prev = paired_significance(curr, prev);
        }
      }
      rows.push_back(std::move(rec));
    }
    summary_runs.emplace_back(name, std::move(rows));
  }
  write_summary_csv(out_dir + "/summary.csv", summary_runs);

  // comparison.json: per-round cross-seed accuracies, pairwise significance,
  // and what-was-selected histograms per strategy.
  std::vector<Clip> pool_clips = make_clips(data, split.train_videos, cfg.base.encoder.clip_len);
  std::map<ClipId, const Clip*> by_id;
  for (const Clip& c : pool_clips) by_id[c.id] = &c;

  nlohmann::ordered_json doc;
  for (Strategy s : cfg.strategies) doc["strategies"].push_back(to_string(s));
  for (std::uint64_t s : cfg.seeds) doc["seeds"].push_back(s);

  doc["rounds"] = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < common_rounds; ++r) {
    nlohmann::ordered_json round_doc;
    round_doc["round"] = r;
    const auto& any_runs = result.runs.begin()->second;
    round_doc["fraction"] = any_runs.front()[r].labeled_fraction;
    for (const auto& [name, seeds_runs] : result.runs) {
      std::vector<double> vals;
      for (const auto& records : seeds_runs) vals.push_back(records[r].metrics.acc.mean);
      MeanStd ms = mean_std(vals);
      round_doc["accuracy"][name] = {{"mean", ms.mean}, {"std", ms.std_dev}};
    }
    round_doc["pairwise_p"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < cfg.strategies.size(); ++i) {
      for (std::size_t j = i + 1; j < cfg.strategies.size(); ++j) {
        const auto& runs_a = result.runs.at(to_string(cfg.strategies[i]));
        const auto& runs_b = result.runs.at(to_string(cfg.strategies[j]));
        std::vector<double> a, b;
        for (std::size_t k = 0; k < cfg.seeds.size(); ++k) {
          a.insert(a.end(), runs_a[k][r].test_accuracies.begin(),
                   runs_a[k][r].test_accuracies.end());
          b.insert(b.end(), runs_b[k][r].test_accuracies.begin(),
                   runs_b[k][r].test_accuracies.end());
        }
        nlohmann::ordered_json pair_doc;
        pair_doc["a"] = to_string(cfg.strategies[i]);
        pair_doc["b"] = to_string(cfg.strategies[j]);
        pair_doc["p"] = (a.size() >= 2 && a.size() == b.size())
                            ? nlohmann::ordered_json(paired_significance(a, b))
                            : nlohmann::ordered_json(nullptr);
        round_doc["pairwise_p"].push_back(pair_doc);
      }
    }
    doc["rounds"].push_back(round_doc);
  }

  for (const auto& [name, seeds_runs] : result.runs) {
    nlohmann::ordered_json hists = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < strat_rounds[name]; ++r) {
      std::vector<const Clip*> selected;
      for (const auto& records : seeds_runs) {
        for (const ClipId& id : records[r].selected) selected.push_back(by_id.at(id));
      }
      SelectionHistogram h = selection_histogram(selected);
      nlohmann::ordered_json hd;
      hd["round"] = r;
      hd["count"] = h.count;
      hd["transition_fraction"] = h.transition_fraction;
      for (const auto& [phase, frac] : h.phase_fraction) {
        hd["phase_fraction"][std::to_string(phase)] = frac;
      }
      hists.push_back(hd);
    }
    doc["histograms"][name] = hists;
  }

  std::ofstream os(out_dir + "/comparison.json", std::ios::binary);
  if (!os) throw IoError("cannot open '" + out_dir + "/comparison.json' for writing");
  os << doc.dump(2) << "\n";
  if (!os) throw IoError("failed writing '" + out_dir + "/comparison.json'");
  return result;
}

}  // namespace lrtd
