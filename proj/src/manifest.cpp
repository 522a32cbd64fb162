#include "lrtd/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "lrtd/errors.hpp"

namespace lrtd {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& known, const char* where) {
  for (const auto& [key, _] : obj.items()) {
    if (!known.count(key)) {
      throw ValidationError(std::string("manifest: unknown key '") + key + "' in " + where);
    }
  }
}

const json* maybe(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

std::vector<std::string> get_strings(const json& v, const char* key) {
  if (!v.is_array()) throw ValidationError(std::string("manifest: ") + key + " must be an array");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) {
      throw ValidationError(std::string("manifest: ") + key + " entries must be strings");
    }
    out.push_back(e.get<std::string>());
  }
  return out;
}

void parse_encoder(const json& obj, EncoderConfig& enc) {
  reject_unknown(obj, {"hidden", "clip_len", "dropout"}, "encoder");
  if (const json* v = maybe(obj, "hidden")) enc.hidden = v->get<int>();
  if (const json* v = maybe(obj, "clip_len")) enc.clip_len = v->get<int>();
  if (const json* v = maybe(obj, "dropout")) enc.dropout = v->get<double>();
}

void parse_train(const json& obj, TrainConfig& t) {
  reject_unknown(obj,
                 {"pretrain_epochs", "finetune_epochs", "pretrain_lr", "finetune_lr",
                  "finetune_nonlocal_lr", "decay_factor", "decay_period", "pretrain_optimizer",
                  "finetune_optimizer", "batch_size", "epoch_cap"},
                 "train");
  if (const json* v = maybe(obj, "pretrain_epochs")) t.pretrain_epochs = v->get<int>();
  if (const json* v = maybe(obj, "finetune_epochs")) t.finetune_epochs = v->get<int>();
  if (const json* v = maybe(obj, "pretrain_lr")) t.pretrain_lr = v->get<double>();
  if (const json* v = maybe(obj, "finetune_lr")) t.finetune_lr = v->get<double>();
  if (const json* v = maybe(obj, "finetune_nonlocal_lr")) t.finetune_nonlocal_lr = v->get<double>();
  if (const json* v = maybe(obj, "decay_factor")) t.decay_factor = v->get<double>();
  if (const json* v = maybe(obj, "decay_period")) t.decay_period = v->get<int>();
  if (const json* v = maybe(obj, "pretrain_optimizer"))
    t.pretrain_optimizer = v->get<std::string>();
  if (const json* v = maybe(obj, "finetune_optimizer"))
    t.finetune_optimizer = v->get<std::string>();
  if (const json* v = maybe(obj, "batch_size")) t.batch_size = v->get<int>();
  if (const json* v = maybe(obj, "epoch_cap")) t.epoch_cap = v->get<int>();
}

void parse_selection(const json& obj, SelectionConfig& s) {
  reject_unknown(obj, {"strategy", "top_n", "batch_fraction", "matrix_mode", "mc_passes"},
                 "selection");
  if (const json* v = maybe(obj, "strategy")) s.strategy = parse_strategy(v->get<std::string>());
  if (const json* v = maybe(obj, "top_n")) s.top_n = v->get<int>();
  if (const json* v = maybe(obj, "batch_fraction")) s.batch_fraction = v->get<double>();
  if (const json* v = maybe(obj, "matrix_mode")) {
    s.matrix_mode = parse_matrix_mode(v->get<std::string>());
  }
  if (const json* v = maybe(obj, "mc_passes")) s.mc_passes = v->get<int>();
}

void parse_stop(const json& obj, StopRule& r) {
  reject_unknown(obj, {"mode", "max_fraction", "alpha", "split"}, "stop");
  if (const json* v = maybe(obj, "mode")) r.mode = parse_stop_mode(v->get<std::string>());
  if (const json* v = maybe(obj, "max_fraction")) r.max_fraction = v->get<double>();
  if (const json* v = maybe(obj, "alpha")) r.alpha = v->get<double>();
  if (const json* v = maybe(obj, "split")) r.split = v->get<std::string>();
}

}  // namespace

void Manifest::validate() const {
  if (features.empty()) throw ValidationError("manifest: features path is empty");
  if (annotations.empty()) throw ValidationError("manifest: annotations path is empty");
  if (num_phases < 1) throw ValidationError("manifest: num_phases must be >= 1");
  cfg.validate();
  std::set<Strategy> us(strategies.begin(), strategies.end());
  if (us.size() != strategies.size()) throw ValidationError("manifest: duplicate strategy");
  std::set<std::uint64_t> uss(seeds.begin(), seeds.end());
  if (uss.size() != seeds.size()) throw ValidationError("manifest: duplicate seed in seeds");
  if (seeds.empty()) throw ValidationError("manifest: seeds must not be empty");
}

Manifest parse_manifest(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("manifest: top level must be an object");

  reject_unknown(j,
                 {"features", "annotations", "num_phases", "train_videos", "test_videos",
                  "val_videos", "encoder", "train", "selection", "stop", "init_fraction",
                  "warm_start", "seed", "threads", "strategies", "seeds"},
                 "the top level");

  Manifest m;
  try {
    if (const json* v = maybe(j, "features")) m.features = v->get<std::string>();
    if (const json* v = maybe(j, "annotations")) m.annotations = v->get<std::string>();
    if (const json* v = maybe(j, "num_phases")) m.num_phases = v->get<int>();
    if (const json* v = maybe(j, "train_videos"))
      m.split.train_videos = get_strings(*v, "train_videos");
    if (const json* v = maybe(j, "test_videos"))
      m.split.test_videos = get_strings(*v, "test_videos");
    if (const json* v = maybe(j, "val_videos")) m.split.val_videos = get_strings(*v, "val_videos");
    if (const json* v = maybe(j, "encoder")) parse_encoder(*v, m.cfg.encoder);
    if (const json* v = maybe(j, "train")) parse_train(*v, m.cfg.train);
    if (const json* v = maybe(j, "selection")) parse_selection(*v, m.cfg.selection);
    if (const json* v = maybe(j, "stop")) parse_stop(*v, m.cfg.stop);
    if (const json* v = maybe(j, "init_fraction")) m.cfg.init_fraction = v->get<double>();
    if (const json* v = maybe(j, "warm_start")) m.cfg.warm_start = v->get<bool>();
    if (const json* v = maybe(j, "seed")) m.cfg.seed = v->get<std::uint64_t>();
    if (const json* v = maybe(j, "threads")) m.cfg.threads = v->get<int>();
    if (const json* v = maybe(j, "strategies")) {
      for (const std::string& s : get_strings(*v, "strategies")) {
        m.strategies.push_back(parse_strategy(s));
      }
    }
    if (const json* v = maybe(j, "seeds")) m.seeds = v->get<std::vector<std::uint64_t>>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("manifest: ") + e.what());
  }
  if (m.features.empty()) throw ValidationError("manifest: missing required key 'features'");
  if (m.annotations.empty()) throw ValidationError("manifest: missing required key 'annotations'");
  if (m.seeds.empty()) m.seeds = {m.cfg.seed};

  // The encoder must classify into the dataset's phase space; dim is filled
  // from the feature file later, so a placeholder keeps validate() happy.
  m.cfg.encoder.num_phases = m.num_phases;
  m.validate();
  return m;
}

std::string manifest_to_json(const Manifest& m) {
  json j;
  j["features"] = m.features;
  j["annotations"] = m.annotations;
  j["num_phases"] = m.num_phases;
  j["train_videos"] = m.split.train_videos;
  j["test_videos"] = m.split.test_videos;
  j["val_videos"] = m.split.val_videos;
  j["encoder"] = {{"hidden", m.cfg.encoder.hidden},
                  {"clip_len", m.cfg.encoder.clip_len},
                  {"dropout", m.cfg.encoder.dropout}};
  j["train"] = {{"pretrain_epochs", m.cfg.train.pretrain_epochs},
                {"finetune_epochs", m.cfg.train.finetune_epochs},
                {"pretrain_lr", m.cfg.train.pretrain_lr},
                {"finetune_lr", m.cfg.train.finetune_lr},
                {"finetune_nonlocal_lr", m.cfg.train.finetune_nonlocal_lr},
                {"decay_factor", m.cfg.train.decay_factor},
                {"decay_period", m.cfg.train.decay_period},
                {"pretrain_optimizer", m.cfg.train.pretrain_optimizer},
                {"finetune_optimizer", m.cfg.train.finetune_optimizer},
                {"batch_size", m.cfg.train.batch_size},
                {"epoch_cap", m.cfg.train.epoch_cap}};
  j["selection"] = {{"strategy", to_string(m.cfg.selection.strategy)},
                    {"top_n", m.cfg.selection.top_n},
                    {"batch_fraction", m.cfg.selection.batch_fraction},
                    {"matrix_mode", to_string(m.cfg.selection.matrix_mode)},
                    {"mc_passes", m.cfg.selection.mc_passes}};
  j["stop"] = {{"mode", to_string(m.cfg.stop.mode)},
               {"max_fraction", m.cfg.stop.max_fraction},
               {"alpha", m.cfg.stop.alpha},
               {"split", m.cfg.stop.split}};
  j["init_fraction"] = m.cfg.init_fraction;
  j["warm_start"] = m.cfg.warm_start;
  j["seed"] = m.cfg.seed;
  j["threads"] = m.cfg.threads;
  json strategies = json::array();
  for (Strategy s : m.strategies) strategies.push_back(to_string(s));
  j["strategies"] = strategies;
  j["seeds"] = m.seeds;
  return j.dump(2) + "\n";
}

Manifest load_manifest_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open manifest '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  Manifest m = parse_manifest(ss.str());

  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) {
      p = (base / p).string();
    }
  };
  resolve(m.features);
  resolve(m.annotations);
  return m;
}

}  // namespace lrtd
