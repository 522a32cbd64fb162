#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "lrtd/errors.hpp"
#include "lrtd/grad_check.hpp"
#include "lrtd/model.hpp"
#include "lrtd/ops.hpp"
#include "lrtd/rng.hpp"
#include "lrtd/tape.hpp"

using namespace lrtd;
namespace fs = std::filesystem;

namespace {

EncoderConfig small_cfg() {
  EncoderConfig cfg;
  cfg.dim = 3;
  cfg.hidden = 4;
  cfg.clip_len = 4;
  cfg.num_phases = 3;
  return cfg;
}

Tensor random_clip(Rng& rng, int dim, int T, double scale = 1.0) {
  Tensor x(dim, T);
  for (auto& v : x.data()) v = rng.normal() * scale;
  return x;
}

void zero_all(ModelParams& p) {
  for (Param* q : p.all()) q->value.fill(0.0);
}

// Plain-loop LSTM reimplementation used as the unrolled-recurrence oracle.
Tensor lstm_oracle(const ModelParams& p, const Tensor& x) {
  const int D = p.cfg.dim, H = p.cfg.hidden, T = x.cols();
  auto matvec = [](const Tensor& w, const std::vector<double>& v) {
    std::vector<double> out(w.rows(), 0.0);
    for (int i = 0; i < w.rows(); ++i)
      for (int j = 0; j < w.cols(); ++j) out[i] += w.at(i, j) * v[j];
    return out;
  };
  std::vector<double> h(H, 0.0), c(H, 0.0);
  Tensor result(H, T);
  for (int t = 0; t < T; ++t) {
    std::vector<double> xt(D);
    for (int d = 0; d < D; ++d) xt[d] = x.at(d, t);
    std::vector<double> u = matvec(p.w_in.value, xt);
    for (int i = 0; i < H; ++i) u[i] = std::tanh(u[i] + p.b_in.value.at(i, 0));
    std::vector<double> a1 = matvec(p.w_x.value, u);
    std::vector<double> a2 = matvec(p.w_h.value, h);
    for (int i = 0; i < H; ++i) {
      const double gi = 1.0 / (1.0 + std::exp(-(a1[i] + a2[i] + p.b_lstm.value.at(i, 0))));
      const double gf =
          1.0 / (1.0 + std::exp(-(a1[H + i] + a2[H + i] + p.b_lstm.value.at(H + i, 0))));
      const double gg = std::tanh(a1[2 * H + i] + a2[2 * H + i] + p.b_lstm.value.at(2 * H + i, 0));
      const double go =
          1.0 /
          (1.0 + std::exp(-(a1[3 * H + i] + a2[3 * H + i] + p.b_lstm.value.at(3 * H + i, 0))));
      c[i] = gf * c[i] + gi * gg;
      h[i] = go * std::tanh(c[i]);
    }
    for (int i = 0; i < H; ++i) result.at(i, t) = h[i];
  }
  return result;
}

}  // namespace

TEST_CASE("zero weights and zero input give a zero hidden sequence") {
  ModelParams p = ModelParams::init(small_cfg(), 1);
  zero_all(p);
  Tensor x(3, 4);
  Tensor z = encode_tensor(p, x);
  REQUIRE(z.rows() == 4);
  REQUIRE(z.cols() == 4);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(z[i] == 0.0);
}

TEST_CASE("encoder matches a hand-unrolled recurrence") {
  Rng rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    ModelParams p = ModelParams::init(small_cfg(), 100 + trial);
    Tensor x = random_clip(rng, 3, 3);
    Tensor z = encode_tensor(p, x);
    Tensor ref = lstm_oracle(p, x);
    REQUIRE(z.same_shape(ref));
    for (std::size_t i = 0; i < z.size(); ++i)
      CHECK(z[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  }
}

TEST_CASE("encoder is causal") {
  Rng rng(7);
  ModelParams p = ModelParams::init(small_cfg(), 5);
  Tensor x = random_clip(rng, 3, 4);
  Tensor base = encode_tensor(p, x);
  for (int t = 1; t < 4; ++t) {
    Tensor perturbed = x;
    for (int d = 0; d < 3; ++d) perturbed.at(d, t) += 1.5;
    Tensor z = encode_tensor(p, perturbed);
    for (int col = 0; col < t; ++col)
      for (int i = 0; i < 4; ++i) CHECK(z.at(i, col) == base.at(i, col));
  }
}

TEST_CASE("zero classifier weights give zero logits and uniform softmax") {
  ModelParams p = ModelParams::init(small_cfg(), 3);
  p.w_out.value.fill(0.0);
  p.b_out.value.fill(0.0);
  Rng rng(11);
  Tensor x = random_clip(rng, 3, 4);
  Tape tape;
  const Tensor& logits = tape.value(clip_logits(tape, p, x, false));
  REQUIRE(logits.rows() == 3);
  for (int i = 0; i < 3; ++i) CHECK(logits.at(i, 0) == 0.0);
  Tensor probs = ops::softmax_rows(ops::transpose(logits));
  for (int i = 0; i < 3; ++i) CHECK(probs.at(0, i) == doctest::Approx(1.0 / 3).epsilon(1e-14));
}

TEST_CASE("constant hidden sequence pools to itself") {
  ModelParams p = ModelParams::init(small_cfg(), 4);
  Tape tape;
  Tensor z(4, 6);
  for (int i = 0; i < 4; ++i)
    for (int t = 0; t < 6; ++t) z.at(i, t) = 0.25 * i;
  Var zv = tape.input(z);
  Var pooled = tape.maxpool_time(zv, 6, 1);
  const Tensor& pv = tape.value(pooled);
  REQUIRE(pv.cols() == 1);
  for (int i = 0; i < 4; ++i) CHECK(pv.at(i, 0) == 0.25 * i);
}

TEST_CASE("end-to-end loss gradient matches finite differences") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    ModelParams p = ModelParams::init(small_cfg(), seed);
    Rng rng(900 + seed);
    Tensor x = random_clip(rng, 3, 4);
    auto build = [&](Tape& tape) {
      return tape.cross_entropy_logits(clip_logits(tape, p, x, true), 1);
    };
    CHECK(grad_check(build, p.all(), 1e-5) < 1e-4);
  }
}

TEST_CASE("uniform prediction has maximal entropy") {
  ModelParams p = ModelParams::init(small_cfg(), 9);
  p.w_out.value.fill(0.0);
  p.b_out.value.fill(0.0);
  Rng rng(13);
  Tensor x = random_clip(rng, 3, 4);
  const double h = predictive_entropy(p, x, 1, 0.0, 77, false);
  CHECK(h == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("a dominating logit has near-zero entropy") {
  ModelParams p = ModelParams::init(small_cfg(), 9);
  p.w_out.value.fill(0.0);
  p.b_out.value.fill(0.0);
  p.b_out.value.at(0, 0) = 50.0;
  Rng rng(13);
  Tensor x = random_clip(rng, 3, 4);
  CHECK(predictive_entropy(p, x, 1, 0.0, 77, false) < 1e-6);
}

TEST_CASE("extra passes change nothing when dropout is off") {
  ModelParams p = ModelParams::init(small_cfg(), 10);
  Rng rng(14);
  Tensor x = random_clip(rng, 3, 4);
  const double h1 = predictive_entropy(p, x, 1, 0.0, 5, true);
  const double h4 = predictive_entropy(p, x, 4, 0.0, 5, true);
  CHECK(h1 == h4);
}

TEST_CASE("entropy stays within its bounds") {
  Rng rng(15);
  for (int trial = 0; trial < 10; ++trial) {
    ModelParams p = ModelParams::init(small_cfg(), 200 + trial);
    Tensor x = random_clip(rng, 3, 4, 2.0);
    const double h = predictive_entropy(p, x, 3, 0.3, trial, true);
    CHECK(h >= 0.0);
    CHECK(h <= std::log(3.0) + 1e-12);
    for (double fh : frame_entropies(p, x, 3, 0.3, trial, true)) {
      CHECK(fh >= 0.0);
      CHECK(fh <= std::log(3.0) + 1e-12);
    }
  }
}

TEST_CASE("per-clip entropy seeding is order-independent") {
  ModelParams p = ModelParams::init(small_cfg(), 16);
  Rng rng(17);
  Tensor a = random_clip(rng, 3, 4);
  Tensor b = random_clip(rng, 3, 4);
  const double ha1 = predictive_entropy(p, a, 5, 0.4, 1001, true);
  const double hb1 = predictive_entropy(p, b, 5, 0.4, 1002, true);
  const double hb2 = predictive_entropy(p, b, 5, 0.4, 1002, true);
  const double ha2 = predictive_entropy(p, a, 5, 0.4, 1001, true);
  CHECK(ha1 == ha2);
  CHECK(hb1 == hb2);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  fs::path dir = fs::temp_directory_path() / "lrtd_test_ckpt";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string path = (dir / "model.ckpt").string();

  EncoderConfig cfg;
  cfg.dim = 5;
  cfg.hidden = 6;
  cfg.clip_len = 7;
  cfg.num_phases = 4;
  cfg.dropout = 0.2;
  ModelParams p = ModelParams::init(cfg, 77);
  save_checkpoint(path, p);
  ModelParams q = load_checkpoint(path);

  CHECK(q.cfg.dim == 5);
  CHECK(q.cfg.hidden == 6);
  CHECK(q.cfg.clip_len == 7);
  CHECK(q.cfg.num_phases == 4);
  CHECK(q.cfg.dropout == 0.2);
  auto pa = p.all();
  auto qa = q.all();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    REQUIRE(pa[i]->id == qa[i]->id);
    REQUIRE(pa[i]->value.same_shape(qa[i]->value));
    for (std::size_t k = 0; k < pa[i]->value.size(); ++k) CHECK(pa[i]->value[k] == qa[i]->value[k]);
  }

  const std::string path2 = (dir / "model2.ckpt").string();
  save_checkpoint(path2, q);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  fs::remove_all(dir);
}

TEST_CASE("corrupted checkpoints are rejected") {
  fs::path dir = fs::temp_directory_path() / "lrtd_test_ckpt_bad";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string path = (dir / "model.ckpt").string();
  ModelParams p = ModelParams::init(small_cfg(), 1);
  save_checkpoint(path, p);

  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  bytes[2] = 'X';
  std::ofstream(path, std::ios::binary) << bytes;
  CHECK_THROWS_AS(load_checkpoint(path), ParseError);

  const std::string trunc = (dir / "trunc.ckpt").string();
  std::ofstream(trunc, std::ios::binary) << bytes.substr(0, bytes.size() - 9);
  CHECK_THROWS_AS(load_checkpoint(trunc), ParseError);
  fs::remove_all(dir);
}

TEST_CASE("config validation rejects bad dimensions") {
  EncoderConfig cfg = small_cfg();
  cfg.hidden = 5;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = small_cfg();
  cfg.dim = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = small_cfg();
  cfg.dropout = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  ModelParams p = ModelParams::init(small_cfg(), 0);
  Tensor wrong(5, 4);
  CHECK_THROWS_AS(encode_tensor(p, wrong), DimensionError);
}

TEST_CASE("parameter init is deterministic per seed and zero for the residual map") {
  ModelParams a = ModelParams::init(small_cfg(), 123);
  ModelParams b = ModelParams::init(small_cfg(), 123);
  ModelParams c = ModelParams::init(small_cfg(), 124);
  auto av = a.all();
  auto bv = b.all();
  bool differs = false;
  for (std::size_t i = 0; i < av.size(); ++i) {
    for (std::size_t k = 0; k < av[i]->value.size(); ++k) {
      CHECK(av[i]->value[k] == bv[i]->value[k]);
    }
  }
  auto cv = c.all();
  for (std::size_t i = 0; i < av.size(); ++i)
    for (std::size_t k = 0; k < av[i]->value.size(); ++k)
      if (av[i]->value[k] != cv[i]->value[k]) differs = true;
  CHECK(differs);
  for (std::size_t k = 0; k < a.w_z.value.size(); ++k) CHECK(a.w_z.value[k] == 0.0);
  for (int i = 0; i < 4; ++i) CHECK(a.b_lstm.value.at(4 + i, 0) == 1.0);
}
