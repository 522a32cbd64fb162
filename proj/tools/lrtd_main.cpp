#include <CLI11.hpp>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lrtd/alloop.hpp"
#include "lrtd/errors.hpp"
#include "lrtd/manifest.hpp"
#include "lrtd/nonlocal.hpp"
#include "lrtd/synthetic.hpp"
#include "lrtd/text.hpp"

namespace fs = std::filesystem;
using namespace lrtd;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitRuntime = 3;

struct GlobalArgs {
  std::string manifest_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Flag beats environment beats manifest/spec value.
void apply_overrides(const GlobalArgs& args, std::uint64_t& seed, std::string& out_dir) {
  if (const char* env = std::getenv("LRTD_SEED"); env && !args.seed) {
    try {
      seed = std::stoull(env);
    } catch (const std::exception&) {
      throw ValidationError(std::string("LRTD_SEED is not an unsigned integer: '") + env + "'");
    }
  }
  if (args.seed) seed = *args.seed;
  if (const char* env = std::getenv("LRTD_OUT"); env && args.out_dir.empty()) out_dir = env;
  if (!args.out_dir.empty()) out_dir = args.out_dir;
}

std::string require_out(const std::string& out_dir) {
  if (out_dir.empty()) {
    throw ValidationError("no output directory: pass --out or set LRTD_OUT");
  }
  return out_dir;
}

Manifest load_manifest(const GlobalArgs& args) {
  if (args.manifest_path.empty()) throw ValidationError("no manifest: pass --manifest");
  return load_manifest_file(args.manifest_path);
}

Dataset load_manifest_dataset(const Manifest& m) {
  return load_dataset(m.features, m.annotations, m.num_phases);
}

// The manifest leaves the feature dim to the data; the model must match it.
void resolve_encoder(Manifest& m, const Dataset& ds) {
  m.cfg.encoder.dim = ds.dim;
  m.cfg.encoder.num_phases = m.num_phases;
  m.cfg.encoder.validate();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << text;
  if (!os) throw IoError("failed writing '" + path + "'");
}

// Ground-truth/prediction TSV: video_id, frame_index, phase, with the
// annotation format's trailing outlier column accepted and ignored.
std::map<std::string, std::vector<int>> read_phase_tsv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(is, line)) throw ParseError(path + ": empty file");
  if (line != "video_id\tframe_index\tphase" &&
      line != "video_id\tframe_index\tphase\toutlier_flag") {
    throw ParseError(path + ": unexpected header '" + line + "'");
  }
  std::map<std::string, std::vector<int>> phases;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string video_id, frame_str, phase_str;
    if (!std::getline(ls, video_id, '\t') || !std::getline(ls, frame_str, '\t') ||
        !std::getline(ls, phase_str, '\t')) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected at least 3 columns");
    }
    int frame = 0, phase = 0;
    try {
      frame = std::stoi(frame_str);
      phase = std::stoi(phase_str);
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": bad number");
    }
    std::vector<int>& v = phases[video_id];
    if (frame != static_cast<int>(v.size())) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": frame " + std::to_string(frame) +
                       " out of order (expected " + std::to_string(v.size()) + ")");
    }
    v.push_back(phase);
  }
  if (phases.empty()) throw ParseError(path + ": no rows");
  return phases;
}

int cmd_gen(const GlobalArgs& args, const std::string& spec_path) {
  SyntheticSpec spec = parse_synthetic_spec(read_file(spec_path));
  std::string out_dir;
  std::uint64_t seed = spec.seed;
  apply_overrides(args, seed, out_dir);
  spec.seed = seed;
  require_out(out_dir);
  Dataset ds = gen_synthetic_files(spec, out_dir);
  std::cout << "wrote " << ds.videos.size() << " videos (" << ds.total_frames() << " frames, dim "
            << ds.dim << ") to " << out_dir << "\n";
  return kExitOk;
}

int cmd_al(const GlobalArgs& args) {
  Manifest m = load_manifest(args);
  std::string out_dir;
  apply_overrides(args, m.cfg.seed, out_dir);
  if (args.threads) m.cfg.threads = *args.threads;
  require_out(out_dir);

  Dataset ds = load_manifest_dataset(m);
  resolve_encoder(m, ds);
  m.seeds = {m.cfg.seed};

  fs::create_directories(out_dir);
  write_text(out_dir + "/manifest.json", manifest_to_json(m));
  std::ofstream log(out_dir + "/run.log", std::ios::binary);
  if (!log) throw IoError("cannot open '" + out_dir + "/run.log' for writing");

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<RoundRecord> records =
      run_active_learning(ds, m.split, m.cfg, out_dir, nullptr, nullptr, &log);
  log << "total wall "
      << fmt_double(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count())
      << " s\n";
  std::cout << records.size() << " rounds; summary at " << out_dir << "/summary.csv\n";
  return kExitOk;
}

int cmd_compare(const GlobalArgs& args) {
  Manifest m = load_manifest(args);
  std::string out_dir;
  apply_overrides(args, m.cfg.seed, out_dir);
  if (args.threads) m.cfg.threads = *args.threads;
  require_out(out_dir);
  if (args.seed) m.seeds = {*args.seed};

  Dataset ds = load_manifest_dataset(m);
  resolve_encoder(m, ds);

  CompareConfig cc;
  cc.base = m.cfg;
  cc.strategies = m.strategies;
  cc.seeds = m.seeds;

  fs::create_directories(out_dir);
  write_text(out_dir + "/manifest.json", manifest_to_json(m));
  std::ofstream log(out_dir + "/run.log", std::ios::binary);
  if (!log) throw IoError("cannot open '" + out_dir + "/run.log' for writing");

  const auto t0 = std::chrono::steady_clock::now();
  run_compare(ds, m.split, cc, out_dir, &log);
  log << "total wall "
      << fmt_double(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count())
      << " s\n";
  std::cout << "comparison report at " << out_dir << "/comparison.json\n";
  return kExitOk;
}

int cmd_eval(const GlobalArgs& args, const std::string& gt_path, const std::string& pred_path) {
  std::string out_dir;
  std::uint64_t unused_seed = 0;
  apply_overrides(args, unused_seed, out_dir);
  require_out(out_dir);

  const auto gt = read_phase_tsv(gt_path);
  const auto pred = read_phase_tsv(pred_path);
  std::vector<VideoMetrics> per_video;
  for (const auto& [video_id, gt_phases] : gt) {
    auto it = pred.find(video_id);
    if (it == pred.end()) {
      throw ValidationError("predictions are missing video '" + video_id + "'");
    }
    if (it->second.size() != gt_phases.size()) {
      throw ValidationError("video '" + video_id + "': " + std::to_string(it->second.size()) +
                            " predicted frames vs " + std::to_string(gt_phases.size()) +
                            " ground-truth frames");
    }
    per_video.push_back(eval_video(gt_phases, it->second));
  }
  for (const auto& [video_id, _] : pred) {
    if (!gt.count(video_id)) {
      throw ValidationError("predictions contain unknown video '" + video_id + "'");
    }
  }
  fs::create_directories(out_dir);
  write_metrics_json(out_dir + "/metrics.json", aggregate(per_video));
  std::cout << per_video.size() << " videos; metrics at " << out_dir << "/metrics.json\n";
  return kExitOk;
}

int cmd_score(const GlobalArgs& args, const std::string& checkpoint_path) {
  Manifest m = load_manifest(args);
  std::string out_dir;
  apply_overrides(args, m.cfg.seed, out_dir);
  require_out(out_dir);

  Dataset ds = load_manifest_dataset(m);
  ModelParams params = load_checkpoint(checkpoint_path);
  if (params.cfg.dim != ds.dim) {
    throw ValidationError("checkpoint feature dim " + std::to_string(params.cfg.dim) +
                          " does not match dataset dim " + std::to_string(ds.dim));
  }
  if (params.cfg.num_phases != m.num_phases) {
    throw ValidationError("checkpoint has " + std::to_string(params.cfg.num_phases) +
                          " phases, manifest says " + std::to_string(m.num_phases));
  }

  std::vector<Clip> clips = make_clips(ds, m.split.train_videos, params.cfg.clip_len);
  if (clips.empty()) throw ValidationError("train split produced no clips");
  std::vector<const Clip*> ptrs;
  ptrs.reserve(clips.size());
  for (const Clip& c : clips) ptrs.push_back(&c);

  std::vector<ClipScore> scores = score_pool(params, ptrs, m.cfg.selection, m.cfg.seed);
  fs::create_directories(out_dir);
  write_scores_tsv(out_dir + "/scores.tsv", 0, scores, {});
  std::cout << scores.size() << " clips scored; table at " << out_dir << "/scores.tsv\n";
  return kExitOk;
}

int cmd_export_depmatrix(const GlobalArgs& args, const std::string& checkpoint_path,
                         const std::string& clips_arg, const std::string& mode_arg) {
  Manifest m = load_manifest(args);
  std::string out_dir;
  apply_overrides(args, m.cfg.seed, out_dir);
  require_out(out_dir);

  Dataset ds = load_manifest_dataset(m);
  ModelParams params = load_checkpoint(checkpoint_path);
  if (params.cfg.dim != ds.dim) {
    throw ValidationError("checkpoint feature dim " + std::to_string(params.cfg.dim) +
                          " does not match dataset dim " + std::to_string(ds.dim));
  }
  const MatrixMode mode =
      mode_arg.empty() ? m.cfg.selection.matrix_mode : parse_matrix_mode(mode_arg);

  std::vector<Clip> clips = make_clips(ds, m.split.train_videos, params.cfg.clip_len);
  std::map<std::string, const Clip*> by_str;
  for (const Clip& c : clips) by_str[c.id.str()] = &c;

  std::vector<const Clip*> chosen;
  if (clips_arg.empty()) {
    for (const Clip& c : clips) chosen.push_back(&c);
  } else {
    std::istringstream ss(clips_arg);
    std::string token;
    while (std::getline(ss, token, ',')) {
      auto it = by_str.find(token);
      if (it == by_str.end()) {
        throw ValidationError("clip '" + token + "' is not in the train pool");
      }
      chosen.push_back(it->second);
    }
  }
  if (chosen.empty()) throw ValidationError("no clips to export");

  std::vector<std::pair<std::string, DependencyMatrix>> rows;
  rows.reserve(chosen.size());
  for (const Clip* c : chosen) {
    const Tensor x = encode_tensor(params, c->features);
    rows.emplace_back(c->id.str(),
                      dependency_matrix(x, params.w_theta.value, params.w_phi.value, mode));
  }
  fs::create_directories(out_dir);
  write_depmatrix_tsv(out_dir + "/depmatrix.tsv", rows);
  std::cout << rows.size() << " matrices at " << out_dir << "/depmatrix.tsv\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active learning for sequential phase recognition"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs args;
  app.add_option("--manifest", args.manifest_path, "experiment manifest (JSON)");
  app.add_option("--out", args.out_dir, "output directory (or LRTD_OUT)");
  app.add_option("--seed", args.seed, "seed override (or LRTD_SEED)");
  app.add_option("--threads", args.threads, "parallelism cap")->check(CLI::PositiveNumber);

  std::string spec_path, gt_path, pred_path, checkpoint_path, clips_arg, mode_arg;

  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  gen->add_option("--spec", spec_path, "generator spec (JSON)")->required();

  app.add_subcommand("al", "run one active-learning experiment");
  app.add_subcommand("compare", "run several strategies on shared pools");

  CLI::App* eval = app.add_subcommand("eval", "score predictions against ground truth");
  eval->add_option("--gt", gt_path, "ground-truth TSV")->required();
  eval->add_option("--pred", pred_path, "predictions TSV")->required();

  CLI::App* score = app.add_subcommand("score", "score the train pool with a checkpoint");
  score->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();

  CLI::App* exp = app.add_subcommand("export-depmatrix", "dump dependency matrices");
  exp->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
  exp->add_option("--clips", clips_arg, "comma-separated clip ids (default: whole pool)");
  exp->add_option("--mode", mode_arg, "raw or normalized (default: manifest setting)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }

  try {
    if (gen->parsed()) return cmd_gen(args, spec_path);
    if (app.get_subcommand("al")->parsed()) return cmd_al(args);
    if (app.get_subcommand("compare")->parsed()) return cmd_compare(args);
    if (eval->parsed()) return cmd_eval(args, gt_path, pred_path);
    if (score->parsed()) return cmd_score(args, checkpoint_path);
    if (exp->parsed()) return cmd_export_depmatrix(args, checkpoint_path, clips_arg, mode_arg);
    std::cerr << "error: no command given\n";
    return kExitInput;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
