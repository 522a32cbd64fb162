#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lrtd/dataset.hpp"

namespace lrtd {

// Per-phase scores within one video. A field is empty when its denominator
// does not exist (phase absent from the relevant side).
struct PhaseStat {
  std::optional<double> pr, re, ja, f1;
};

struct VideoMetrics {
  double acc = 0.0;
  std::map<int, PhaseStat> phases;  // phases appearing in gt or pred
  std::optional<double> macro_pr, macro_re, macro_ja, macro_f1;
};

// Mean and population std over the videos where the value was defined.
struct AggregateStat {
  double mean = 0.0;
  double std_dev = 0.0;
  int count = 0;
};

struct PhaseAggregate {
  AggregateStat pr, re, ja, f1;
};

struct DatasetMetrics {
  int num_videos = 0;
  AggregateStat acc, pr, re, ja, f1;
  std::map<int, PhaseAggregate> per_phase;
};

struct SelectionHistogram {
  int count = 0;
  std::map<int, double> phase_fraction;  // by clip label, sums to 1
  double transition_fraction = 0.0;      // clips whose frames span >= 2 phases
};

VideoMetrics eval_video(const std::vector<int>& gt, const std::vector<int>& pred);
DatasetMetrics aggregate(const std::vector<VideoMetrics>& per_video);
SelectionHistogram selection_histogram(const std::vector<const Clip*>& selected);

void write_metrics_json(const std::string& path, const DatasetMetrics& m);

struct CurveRow {
  double fraction = 0.0;
  std::string metric;
  double mean = 0.0;
  double std_dev = 0.0;
  std::string strategy;
};
void write_curve_csv(const std::string& path, const std::vector<CurveRow>& rows);

}  // namespace lrtd
