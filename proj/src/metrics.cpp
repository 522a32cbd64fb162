#include "lrtd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <set>

#include "lrtd/errors.hpp"
#include "lrtd/text.hpp"

namespace lrtd {

namespace {

AggregateStat stat_of(const std::vector<double>& values) {
  AggregateStat s;
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  const bool constant =
      std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); });
  if (constant) {
    s.mean = values.front();
    s.std_dev = 0.0;
    return s;
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= values.size();
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  s.mean = mean;
  s.std_dev = std::sqrt(ss / values.size());
  return s;
}

nlohmann::json stat_json(const AggregateStat& s) {
  if (s.count == 0) return {{"mean", nullptr}, {"std", nullptr}, {"count", 0}};
  return {{"mean", s.mean}, {"std", s.std_dev}, {"count", s.count}};
}

void push_defined(std::vector<double>& out, const std::optional<double>& v) {
  if (v) out.push_back(*v);
}

}  // namespace

VideoMetrics eval_video(const std::vector<int>& gt, const std::vector<int>& pred) {
  if (gt.size() != pred.size())
    throw ValidationError("eval_video: length mismatch (" + std::to_string(gt.size()) + " gt vs " +
                          std::to_string(pred.size()) + " pred frames)");
  if (gt.empty()) throw ValidationError("eval_video: empty sequences");

  VideoMetrics m;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gt.size(); ++i)
    if (gt[i] == pred[i]) ++correct;
  m.acc = static_cast<double>(correct) / static_cast<double>(gt.size());

  std::set<int> phases(gt.begin(), gt.end());
  phases.insert(pred.begin(), pred.end());
  for (int k : phases) {
    std::size_t n_gt = 0, n_pred = 0, inter = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      const bool g = gt[i] == k, p = pred[i] == k;
      n_gt += g;
      n_pred += p;
      inter += g && p;
    }
    const std::size_t uni = n_gt + n_pred - inter;
    PhaseStat st;
    if (n_pred > 0) st.pr = static_cast<double>(inter) / static_cast<double>(n_pred);
    if (n_gt > 0) st.re = static_cast<double>(inter) / static_cast<double>(n_gt);
    st.ja = static_cast<double>(inter) / static_cast<double>(uni);
    if (st.pr && st.re)
      st.f1 = (*st.pr + *st.re > 0.0) ? 2.0 * *st.pr * *st.re / (*st.pr + *st.re) : 0.0;
    m.phases[k] = st;
  }

  std::vector<double> prs, res, jas, f1s;
  for (const auto& [k, st] : m.phases) {
    push_defined(prs, st.pr);
    push_defined(res, st.re);
    push_defined(jas, st.ja);
    push_defined(f1s, st.f1);
  }
  auto mean_of = [](const std::vector<double>& v) -> std::optional<double> {
    if (v.empty()) return std::nullopt;
    double s = 0.0;
    for (double x : v) s += x;
    return s / v.size();
  };
  m.macro_pr = mean_of(prs);
  m.macro_re = mean_of(res);
  m.macro_ja = mean_of(jas);
  m.macro_f1 = mean_of(f1s);
  return m;
}

DatasetMetrics aggregate(const std::vector<VideoMetrics>& per_video) {
  if (per_video.empty()) throw ValidationError("aggregate: no videos");
  DatasetMetrics out;
  out.num_videos = static_cast<int>(per_video.size());

  std::vector<double> accs, prs, res, jas, f1s;
  std::set<int> phase_ids;
  for (const VideoMetrics& v : per_video) {
    accs.push_back(v.acc);
    push_defined(prs, v.macro_pr);
    push_defined(res, v.macro_re);
    push_defined(jas, v.macro_ja);
    push_defined(f1s, v.macro_f1);
    for (const auto& [k, st] : v.phases) phase_ids.insert(k);
  }
  out.acc = stat_of(accs);
  out.pr = stat_of(prs);
  out.re = stat_of(res);
  out.ja = stat_of(jas);
  out.f1 = stat_of(f1s);

  for (int k : phase_ids) {
    std::vector<double> p, r, j, f;
    for (const VideoMetrics& v : per_video) {
      auto it = v.phases.find(k);
      if (it == v.phases.end()) continue;
      push_defined(p, it->second.pr);
      push_defined(r, it->second.re);
      push_defined(j, it->second.ja);
      push_defined(f, it->second.f1);
    }
    out.per_phase[k] = PhaseAggregate{stat_of(p), stat_of(r), stat_of(j), stat_of(f)};
  }
  return out;
}

SelectionHistogram selection_histogram(const std::vector<const Clip*>& selected) {
  if (selected.empty()) throw ValidationError("selection_histogram: empty selection");
  SelectionHistogram h;
  h.count = static_cast<int>(selected.size());
  std::map<int, int> counts;
  int transitions = 0;
  for (const Clip* c : selected) {
    ++counts[c->label];
    const bool multi = std::any_of(c->frame_phases.begin(), c->frame_phases.end(),
                                   [&](int p) { return p != c->frame_phases.front(); });
    transitions += multi;
  }
  for (const auto& [k, n] : counts)
    h.phase_fraction[k] = static_cast<double>(n) / static_cast<double>(h.count);
  h.transition_fraction = static_cast<double>(transitions) / static_cast<double>(h.count);
  return h;
}

void write_metrics_json(const std::string& path, const DatasetMetrics& m) {
  nlohmann::json j;
  j["num_videos"] = m.num_videos;
  j["accuracy"] = stat_json(m.acc);
  j["precision"] = stat_json(m.pr);
  j["recall"] = stat_json(m.re);
  j["jaccard"] = stat_json(m.ja);
  j["f1"] = stat_json(m.f1);
  nlohmann::json phases = nlohmann::json::object();
  for (const auto& [k, agg] : m.per_phase) {
    phases[std::to_string(k)] = {{"precision", stat_json(agg.pr)},
                                 {"recall", stat_json(agg.re)},
                                 {"jaccard", stat_json(agg.ja)},
                                 {"f1", stat_json(agg.f1)}};
  }
  j["per_phase"] = phases;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed while writing '" + path + "'");
}

void write_curve_csv(const std::string& path, const std::vector<CurveRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "fraction,metric,mean,std,strategy\n";
  for (const CurveRow& r : rows)
    out << fmt_double(r.fraction) << ',' << r.metric << ',' << fmt_double(r.mean) << ','
        << fmt_double(r.std_dev) << ',' << r.strategy << '\n';
  if (!out) throw IoError("failed while writing '" + path + "'");
}

}  // namespace lrtd
