#include "lrtd/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "lrtd/errors.hpp"
#include "lrtd/nonlocal.hpp"
#include "lrtd/ops.hpp"
#include "lrtd/rng.hpp"

namespace lrtd {

namespace {

using nlohmann::json;

constexpr char kCkptMagic[8] = {'L', 'R', 'T', 'D', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCkptVersion = 1;

Tensor uniform_init(Rng& rng, int rows, int cols, double bound) {
  Tensor t(rows, cols);
  for (auto& v : t.data()) v = rng.uniform_in(-bound, bound);
  return t;
}

std::vector<double> softmax_of_column(const Tensor& logits_col) {
  const Tensor probs = ops::softmax_rows(ops::transpose(logits_col));
  std::vector<double> out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) out[i] = probs[i];
  return out;
}

double entropy_nats(const std::vector<double>& probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

Tensor dropout_mask(Rng& rng, int rows, int cols, double rate) {
  Tensor mask(rows, cols);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (auto& v : mask.data()) v = rng.uniform() < rate ? 0.0 : keep_scale;
  return mask;
}

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is, const std::string& path) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw ParseError(path + ": truncated checkpoint");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& is, const std::string& path) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw ParseError(path + ": truncated checkpoint");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

// Sized-but-unfilled parameter set with the canonical names and shapes.
ModelParams empty_params(const EncoderConfig& cfg) {
  cfg.validate();
  const int D = cfg.dim, H = cfg.hidden, P = cfg.num_phases;
  ModelParams p;
  p.cfg = cfg;
  p.w_in = Param("w_in", Tensor(H, D));
  p.b_in = Param("b_in", Tensor(H, 1));
  p.w_x = Param("w_x", Tensor(4 * H, H));
  p.w_h = Param("w_h", Tensor(4 * H, H));
  p.b_lstm = Param("b_lstm", Tensor(4 * H, 1));
  p.w_out = Param("w_out", Tensor(P, H));
  p.b_out = Param("b_out", Tensor(P, 1));
  p.w_theta = Param("w_theta", Tensor(H / 2, H));
  p.w_phi = Param("w_phi", Tensor(H / 2, H));
  p.w_g = Param("w_g", Tensor(H / 2, H));
  p.w_z = Param("w_z", Tensor(H, H / 2));
  return p;
}

}  // namespace

void EncoderConfig::validate() const {
  if (dim < 1) throw ValidationError("encoder: dim must be positive");
  if (hidden < 2 || hidden % 2 != 0) throw ValidationError("encoder: hidden must be even and >= 2");
  if (clip_len < 1) throw ValidationError("encoder: clip_len must be positive");
  if (num_phases < 2) throw ValidationError("encoder: num_phases must be >= 2");
  if (!(dropout >= 0.0 && dropout < 1.0))
    throw ValidationError("encoder: dropout must be in [0, 1)");
}

ModelParams ModelParams::init(const EncoderConfig& cfg, std::uint64_t seed) {
  ModelParams p = empty_params(cfg);
  Rng rng(seed_mix(seed, hash_str("model_init")));
  const int D = cfg.dim, H = cfg.hidden;
  const double bd = 1.0 / std::sqrt(static_cast<double>(D));
  const double bh = 1.0 / std::sqrt(static_cast<double>(H));
  p.w_in.value = uniform_init(rng, H, D, bd);
  p.w_x.value = uniform_init(rng, 4 * H, H, bh);
  p.w_h.value = uniform_init(rng, 4 * H, H, bh);
  // Forget-gate bias +1 keeps early memory open.
  for (int i = H; i < 2 * H; ++i) p.b_lstm.value.at(i, 0) = 1.0;
  p.w_out.value = uniform_init(rng, cfg.num_phases, H, bh);
  p.w_theta.value = uniform_init(rng, H / 2, H, bh);
  p.w_phi.value = uniform_init(rng, H / 2, H, bh);
  p.w_g.value = uniform_init(rng, H / 2, H, bh);
  // w_z stays zero: the block starts as the identity.
  return p;
}

std::vector<Param*> ModelParams::all() {
  return {&w_in, &b_in, &w_x, &w_h, &b_lstm, &w_out, &b_out, &w_theta, &w_phi, &w_g, &w_z};
}

std::vector<const Param*> ModelParams::all() const {
  return {&w_in, &b_in, &w_x, &w_h, &b_lstm, &w_out, &b_out, &w_theta, &w_phi, &w_g, &w_z};
}

std::vector<Param*> ModelParams::backbone_params() {
  return {&w_in, &b_in, &w_x, &w_h, &b_lstm, &w_out, &b_out};
}

std::vector<Param*> ModelParams::nonlocal_params() { return {&w_theta, &w_phi, &w_g, &w_z}; }

Var encode(Tape& tape, ModelParams& p, const Tensor& clip_features) {
  const int D = p.cfg.dim, H = p.cfg.hidden;
  if (clip_features.rows() != D) {
    throw DimensionError("encode: clip features are " + clip_features.shape_str() + ", expected " +
                         std::to_string(D) + " rows");
  }
  const int T = clip_features.cols();
  if (T < 1) throw DimensionError("encode: empty clip");

  Var x = tape.input(clip_features);
  Var u = tape.tanh_(tape.add_bias_cols(tape.matmul(tape.leaf(p.w_in), x), tape.leaf(p.b_in)));
  Var wx = tape.leaf(p.w_x);
  Var wh = tape.leaf(p.w_h);
  Var b = tape.leaf(p.b_lstm);

  Var h = tape.input(Tensor(H, 1));
  Var c = tape.input(Tensor(H, 1));
  std::vector<Var> hs;
  hs.reserve(T);
  for (int t = 0; t < T; ++t) {
    Var u_t = tape.select_col(u, t);
    Var pre = tape.add_bias_cols(tape.add(tape.matmul(wx, u_t), tape.matmul(wh, h)), b);
    Var gi = tape.sigmoid(tape.slice_rows(pre, 0, H));
    Var gf = tape.sigmoid(tape.slice_rows(pre, H, 2 * H));
    Var gg = tape.tanh_(tape.slice_rows(pre, 2 * H, 3 * H));
    Var go = tape.sigmoid(tape.slice_rows(pre, 3 * H, 4 * H));
    c = tape.add(tape.mul(gf, c), tape.mul(gi, gg));
    h = tape.mul(go, tape.tanh_(c));
    hs.push_back(h);
  }
  return tape.concat_cols(hs);
}

Var classify(Tape& tape, ModelParams& p, Var hidden_seq) {
  const Tensor& z = tape.value(hidden_seq);
  if (z.rows() != p.cfg.hidden) {
    throw DimensionError("classify: hidden sequence is " + z.shape_str());
  }
  Var pooled = tape.maxpool_time(hidden_seq, z.cols(), 1);
  return tape.add_bias_cols(tape.matmul(tape.leaf(p.w_out), pooled), tape.leaf(p.b_out));
}

Var frame_logits(Tape& tape, ModelParams& p, Var hidden_seq, int t) {
  return tape.add_bias_cols(tape.matmul(tape.leaf(p.w_out), tape.select_col(hidden_seq, t)),
                            tape.leaf(p.b_out));
}

Var clip_logits(Tape& tape, ModelParams& p, const Tensor& clip_features, bool use_nonlocal) {
  Var z = encode(tape, p, clip_features);
  if (use_nonlocal) z = nonlocal_forward(tape, p.w_theta, p.w_phi, p.w_g, p.w_z, z);
  return classify(tape, p, z);
}

Tensor encode_tensor(ModelParams& p, const Tensor& clip_features) {
  Tape tape;
  return tape.value(encode(tape, p, clip_features));
}

Tensor hidden_tensor(ModelParams& p, const Tensor& clip_features, bool use_nonlocal) {
  Tape tape;
  Var z = encode(tape, p, clip_features);
  if (use_nonlocal) z = nonlocal_forward(tape, p.w_theta, p.w_phi, p.w_g, p.w_z, z);
  return tape.value(z);
}

int predict_label(ModelParams& p, const Tensor& clip_features, bool use_nonlocal) {
  Tape tape;
  const Tensor& logits = tape.value(clip_logits(tape, p, clip_features, use_nonlocal));
  int best = 0;
  for (int i = 1; i < logits.rows(); ++i) {
    if (logits.at(i, 0) > logits.at(best, 0)) best = i;
  }
  return best;
}

double predictive_entropy(ModelParams& p, const Tensor& clip_features, int mc_passes, double rate,
                          std::uint64_t seed, bool use_nonlocal) {
  if (mc_passes < 1) throw ValidationError("predictive_entropy: mc_passes must be >= 1");
  if (!(rate >= 0.0 && rate < 1.0))
    throw ValidationError("predictive_entropy: rate must be in [0, 1)");
  const int P = p.cfg.num_phases;
  Rng rng(seed);
  std::vector<double> mean_probs(P, 0.0);
  for (int k = 0; k < mc_passes; ++k) {
    Tape tape;
    Var z = encode(tape, p, clip_features);
    if (use_nonlocal) z = nonlocal_forward(tape, p.w_theta, p.w_phi, p.w_g, p.w_z, z);
    const Tensor& zv = tape.value(z);
    Var zd = tape.mul_const(z, dropout_mask(rng, zv.rows(), zv.cols(), rate));
    Var logits = classify(tape, p, zd);
    const std::vector<double> probs = softmax_of_column(tape.value(logits));
    for (int i = 0; i < P; ++i) mean_probs[i] += probs[i];
  }
  for (double& v : mean_probs) v /= mc_passes;
  return entropy_nats(mean_probs);
}

std::vector<double> frame_entropies(ModelParams& p, const Tensor& clip_features, int mc_passes,
                                    double rate, std::uint64_t seed, bool use_nonlocal) {
  if (mc_passes < 1) throw ValidationError("frame_entropies: mc_passes must be >= 1");
  if (!(rate >= 0.0 && rate < 1.0))
    throw ValidationError("frame_entropies: rate must be in [0, 1)");
  const int P = p.cfg.num_phases;
  const int T = clip_features.cols();
  Rng rng(seed);
  std::vector<std::vector<double>> mean_probs(T, std::vector<double>(P, 0.0));
  for (int k = 0; k < mc_passes; ++k) {
    Tape tape;
    Var z = encode(tape, p, clip_features);
    if (use_nonlocal) z = nonlocal_forward(tape, p.w_theta, p.w_phi, p.w_g, p.w_z, z);
    const Tensor& zv = tape.value(z);
    Var zd = tape.mul_const(z, dropout_mask(rng, zv.rows(), zv.cols(), rate));
    Var all_logits = tape.add_bias_cols(tape.matmul(tape.leaf(p.w_out), zd), tape.leaf(p.b_out));
    const Tensor& lv = tape.value(all_logits);  // P x T
    for (int t = 0; t < T; ++t) {
      const std::vector<double> probs = softmax_of_column(ops::select_col(lv, t));
      for (int i = 0; i < P; ++i) mean_probs[t][i] += probs[i];
    }
  }
  std::vector<double> out(T);
  for (int t = 0; t < T; ++t) {
    for (double& v : mean_probs[t]) v /= mc_passes;
    out[t] = entropy_nats(mean_probs[t]);
  }
  return out;
}

void save_checkpoint(const std::string& path, const ModelParams& p) {
  json header;
  header["config"] = {{"dim", p.cfg.dim},
                      {"hidden", p.cfg.hidden},
                      {"clip_len", p.cfg.clip_len},
                      {"num_phases", p.cfg.num_phases},
                      {"dropout", p.cfg.dropout}};
  json params = json::array();
  for (const Param* q : p.all()) {
    params.push_back({{"name", q->id}, {"rows", q->value.rows()}, {"cols", q->value.cols()}});
  }
  header["params"] = params;
  const std::string header_text = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os.write(kCkptMagic, 8);
  put_u32(os, kCkptVersion);
  put_u32(os, static_cast<std::uint32_t>(header_text.size()));
  os.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const Param* q : p.all()) {
    for (std::size_t i = 0; i < q->value.size(); ++i) put_f64(os, q->value[i]);
  }
  if (!os) throw IoError("write failed on '" + path + "'");
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kCkptMagic, 8) != 0) {
    throw ParseError(path + ": bad magic (not a checkpoint)");
  }
  const std::uint32_t version = get_u32(is, path);
  if (version != kCkptVersion) {
    throw ParseError(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t header_len = get_u32(is, path);
  std::string header_text(header_len, '\0');
  if (header_len > 0 && !is.read(header_text.data(), header_len)) {
    throw ParseError(path + ": truncated checkpoint");
  }
  json header;
  try {
    header = json::parse(header_text);
  } catch (const json::exception& e) {
    throw ParseError(path + ": bad checkpoint header: " + e.what());
  }

  EncoderConfig cfg;
  try {
    cfg.dim = header.at("config").at("dim").get<int>();
    cfg.hidden = header.at("config").at("hidden").get<int>();
    cfg.clip_len = header.at("config").at("clip_len").get<int>();
    cfg.num_phases = header.at("config").at("num_phases").get<int>();
    cfg.dropout = header.at("config").at("dropout").get<double>();
  } catch (const json::exception& e) {
    throw ParseError(path + ": bad checkpoint config: " + e.what());
  }

  ModelParams p = empty_params(cfg);
  const std::vector<Param*> expected = p.all();
  const json& params = header.at("params");
  if (!params.is_array() || params.size() != expected.size()) {
    throw ParseError(path + ": checkpoint lists " + std::to_string(params.size()) +
                     " params, expected " + std::to_string(expected.size()));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const std::string name = params[i].at("name").get<std::string>();
    const int rows = params[i].at("rows").get<int>();
    const int cols = params[i].at("cols").get<int>();
    if (name != expected[i]->id || rows != expected[i]->value.rows() ||
        cols != expected[i]->value.cols()) {
      throw ParseError(path + ": param " + std::to_string(i) + " is " + name + " " +
                       std::to_string(rows) + "x" + std::to_string(cols) + ", expected " +
                       expected[i]->id + " " + expected[i]->value.shape_str());
    }
    for (std::size_t k = 0; k < expected[i]->value.size(); ++k) {
      expected[i]->value[k] = get_f64(is, path);
    }
    require_finite(expected[i]->value, expected[i]->id.c_str());
  }
  char extra;
  if (is.read(&extra, 1)) throw ParseError(path + ": trailing bytes after payload");
  return p;
}

}  // namespace lrtd
