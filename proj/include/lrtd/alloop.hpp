#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lrtd/dataset.hpp"
#include "lrtd/metrics.hpp"
#include "lrtd/model.hpp"
#include "lrtd/selector.hpp"
#include "lrtd/trainer.hpp"

namespace lrtd {

enum class StopMode { fixed_budget, significance };
StopMode parse_stop_mode(const std::string& s);
std::string to_string(StopMode m);

struct StopRule {
  StopMode mode = StopMode::fixed_budget;
  double max_fraction = 0.5;
  double alpha = 0.05;
  // Split feeding the early-stop test: "test" or "validation".
  std::string split = "test";
  void validate() const;
};

struct Split {
  std::vector<std::string> train_videos;
  std::vector<std::string> test_videos;
  std::vector<std::string> val_videos;
};

struct ExperimentConfig {
  EncoderConfig encoder;
  TrainConfig train;
  SelectionConfig selection;
  StopRule stop;
  double init_fraction = 0.10;
  bool warm_start = false;
  std::uint64_t seed = 0;
  int threads = 1;
  void validate() const;
};

struct RoundRecord {
  int round = 0;
  double labeled_fraction = 0.0;
  std::vector<ClipId> selected;  // clips annotated this round (round 0: the seed pool)
  std::vector<double> test_accuracies;
  DatasetMetrics metrics;
  std::optional<double> p_vs_prev;  // paired test against the previous round
  double wall_seconds = 0.0;
};

// Labels clips as they enter the annotated pool. The only built-in
// implementation reads the dataset's ground truth.
class AnnotationProvider {
 public:
  virtual ~AnnotationProvider() = default;
  virtual int label_of(const Clip& clip) = 0;
};

class OracleAnnotator final : public AnnotationProvider {
 public:
  int label_of(const Clip& clip) override { return clip.label; }
};

struct EvalResult {
  std::vector<double> per_video_acc;
  DatasetMetrics aggregate;
};

// Per-round model evaluation. Swappable so the stopping logic can be tested
// against controlled accuracy sequences.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual EvalResult evaluate(int round, ModelParams& params) = 0;
  // Accuracies on the validation split, when the stop rule asks for it.
  virtual std::vector<double> validation_accuracies(int round, ModelParams& params);
};

class SplitEvaluator final : public Evaluator {
 public:
  SplitEvaluator(const Dataset& data, Split split) : data_(data), split_(std::move(split)) {}
  EvalResult evaluate(int round, ModelParams& params) override;
  std::vector<double> validation_accuracies(int round, ModelParams& params) override;

 private:
  const Dataset& data_;
  Split split_;
};

// The full annotate-train-evaluate loop. Writes per-round artifacts and
// summary.csv under out_dir unless out_dir is empty. Null annotator/evaluator
// fall back to the ground-truth oracle and the test-split evaluator.
std::vector<RoundRecord> run_active_learning(const Dataset& data, const Split& split,
                                             const ExperimentConfig& cfg,
                                             const std::string& out_dir,
                                             AnnotationProvider* annotator = nullptr,
                                             Evaluator* evaluator = nullptr,
                                             std::ostream* log = nullptr);

void write_summary_csv(const std::string& path,
                       const std::vector<std::pair<std::string, std::vector<RoundRecord>>>& runs);

struct CompareConfig {
  ExperimentConfig base;             // strategy and seed fields are overridden per run
  std::vector<Strategy> strategies;  // at least two, distinct
  std::vector<std::uint64_t> seeds;  // at least one, distinct
  void validate() const;
};

struct CompareResult {
  // strategy name -> one rounds list per seed, in seed order.
  std::map<std::string, std::vector<std::vector<RoundRecord>>> runs;
  std::vector<CurveRow> curve;
};

// Runs every strategy on every seed against the same pools, then writes
// curve.csv, comparison.json (per-round accuracies, pairwise significance,
// selection histograms), and per-run subdirectories under out_dir.
CompareResult run_compare(const Dataset& data, const Split& split, const CompareConfig& cfg,
                          const std::string& out_dir, std::ostream* log = nullptr);

}  // namespace lrtd
