#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "lrtd/errors.hpp"
#include "lrtd/ops.hpp"
#include "lrtd/rng.hpp"
#include "lrtd/tensor.hpp"

using lrtd::Tensor;
namespace ops = lrtd::ops;

TEST_CASE("matmul hand-checked product") {
  Tensor a{{1.0, 2.0}, {3.0, 4.0}};
  Tensor b{{5.0}, {6.0}};
  Tensor c = ops::matmul(a, b);
  REQUIRE(c.rows() == 2);
  REQUIRE(c.cols() == 1);
  CHECK(c.at(0, 0) == doctest::Approx(17.0).epsilon(1e-15));
  CHECK(c.at(1, 0) == doctest::Approx(39.0).epsilon(1e-15));
}

TEST_CASE("matmul identity leaves matrix unchanged") {
  Tensor eye(2, 2);
  eye.at(0, 0) = 1.0;
  eye.at(1, 1) = 1.0;
  Tensor a{{2.5, -1.0, 0.75}, {4.0, 0.0, -3.25}};
  Tensor out = ops::matmul(eye, a);
  REQUIRE(out.rows() == a.rows());
  REQUIRE(out.cols() == a.cols());
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == a[i]);
}

TEST_CASE("matmul rejects mismatched inner extents") {
  Tensor a(2, 3);
  Tensor b(2, 3);
  CHECK_THROWS_AS(ops::matmul(a, b), lrtd::DimensionError);
  try {
    ops::matmul(a, b);
  } catch (const lrtd::DimensionError& e) {
    std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
  }
}

TEST_CASE("softmax rows: uniform logits give uniform probabilities") {
  Tensor x(1, 4);
  x.fill(3.7);
  Tensor p = ops::softmax_rows(x);
  for (int j = 0; j < 4; ++j) CHECK(p.at(0, j) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("softmax rows: [0, ln 3] maps to [0.25, 0.75]") {
  Tensor x(1, 2);
  x.at(0, 0) = 0.0;
  x.at(0, 1) = std::log(3.0);
  Tensor p = ops::softmax_rows(x);
  CHECK(p.at(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(p.at(0, 1) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("softmax rows: large logits stay finite and sum to one") {
  Tensor x(1, 3);
  x.at(0, 0) = 50.0;
  x.at(0, 1) = 100.0;
  x.at(0, 2) = 100.0;
  Tensor p = ops::softmax_rows(x);
  double sum = 0.0;
  for (int j = 0; j < 3; ++j) {
    CHECK(std::isfinite(p.at(0, j)));
    sum += p.at(0, j);
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.at(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("softmax rows: every row sums to one and shifts cancel") {
  lrtd::Rng rng(17);
  Tensor x(5, 7);
  for (auto& v : x.data()) v = rng.normal() * 4.0;
  Tensor p = ops::softmax_rows(x);
  for (int i = 0; i < 5; ++i) {
    double sum = 0.0;
    for (int j = 0; j < 7; ++j) sum += p.at(i, j);
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
  Tensor shifted = x;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 7; ++j) shifted.at(i, j) += 123.0;
  Tensor q = ops::softmax_rows(shifted);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p[i] - q[i]) < 1e-12);
}

TEST_CASE("maxpool over time: window 2 stride 2") {
  Tensor x(1, 4);
  x.at(0, 0) = 1.0;
  x.at(0, 1) = 3.0;
  x.at(0, 2) = 2.0;
  x.at(0, 3) = 5.0;
  std::vector<int> argmax;
  Tensor y = ops::maxpool_time(x, 2, 2, &argmax);
  REQUIRE(y.cols() == 2);
  CHECK(y.at(0, 0) == 3.0);
  CHECK(y.at(0, 1) == 5.0);
  CHECK(argmax[0] == 1);
  CHECK(argmax[1] == 3);
}

TEST_CASE("maxpool over time: ten columns pool to five") {
  Tensor x(3, 10);
  lrtd::Rng rng(5);
  for (auto& v : x.data()) v = rng.normal();
  Tensor y = ops::maxpool_time(x, 2, 2);
  REQUIRE(y.rows() == 3);
  REQUIRE(y.cols() == 5);
  for (int i = 0; i < 3; ++i)
    for (int t = 0; t < 5; ++t) CHECK(y.at(i, t) == std::max(x.at(i, 2 * t), x.at(i, 2 * t + 1)));
}

TEST_CASE("maxpool over time: constant input is preserved") {
  Tensor x(2, 6);
  x.fill(-0.5);
  Tensor y = ops::maxpool_time(x, 2, 2);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == -0.5);
}

TEST_CASE("maxpool over time: window larger than sequence fails") {
  Tensor x(2, 3);
  CHECK_THROWS_AS(ops::maxpool_time(x, 4, 2), lrtd::DimensionError);
}

TEST_CASE("maxpool over time: ties resolve to the first index") {
  Tensor x(1, 4);
  x.fill(2.0);
  std::vector<int> argmax;
  ops::maxpool_time(x, 2, 2, &argmax);
  CHECK(argmax[0] == 0);
  CHECK(argmax[1] == 2);
}

TEST_CASE("clamp limits values and counts events") {
  Tensor x(1, 5);
  x.at(0, 0) = -100.0;
  x.at(0, 1) = -1.0;
  x.at(0, 2) = 0.0;
  x.at(0, 3) = 1.0;
  x.at(0, 4) = 100.0;
  int events = 0;
  Tensor y = ops::clamp(x, -60.0, 60.0, &events);
  CHECK(y.at(0, 0) == -60.0);
  CHECK(y.at(0, 4) == 60.0);
  CHECK(y.at(0, 2) == 0.0);
  CHECK(events == 2);
}

TEST_CASE("elementwise nonlinearities match reference formulas") {
  Tensor x(1, 3);
  x.at(0, 0) = -2.0;
  x.at(0, 1) = 0.0;
  x.at(0, 2) = 1.5;
  Tensor s = ops::sigmoid(x);
  Tensor t = ops::tanh_(x);
  Tensor e = ops::exp_(x);
  for (int j = 0; j < 3; ++j) {
    double v = x.at(0, j);
    CHECK(s.at(0, j) == doctest::Approx(1.0 / (1.0 + std::exp(-v))).epsilon(1e-15));
    CHECK(t.at(0, j) == doctest::Approx(std::tanh(v)).epsilon(1e-15));
    CHECK(e.at(0, j) == doctest::Approx(std::exp(v)).epsilon(1e-15));
  }
}

TEST_CASE("non-finite values are rejected") {
  Tensor x(1, 2);
  x.at(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(lrtd::require_finite(x, "x"), lrtd::NumericError);
  x.at(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(lrtd::require_finite(x, "x"), lrtd::NumericError);
  x.at(0, 0) = 1.0;
  CHECK_NOTHROW(lrtd::require_finite(x, "x"));
}

TEST_CASE("rng streams are deterministic per seed") {
  lrtd::Rng a(42);
  lrtd::Rng b(42);
  lrtd::Rng c(43);
  bool all_equal = true;
  bool any_diff = false;
  for (int i = 0; i < 100; ++i) {
    double va = a.uniform();
    double vb = b.uniform();
    double vc = c.uniform();
    if (va != vb) all_equal = false;
    if (va != vc) any_diff = true;
    CHECK(va >= 0.0);
    CHECK(va < 1.0);
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("rng normal moments are plausible") {
  lrtd::Rng rng(7);
  const int n = 20000;
  double sum = 0.0;
  double sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double v = rng.normal();
    sum += v;
    sumsq += v * v;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.05);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("rng below is unbiased over small ranges") {
  lrtd::Rng rng(11);
  std::vector<int> counts(5, 0);
  const int n = 50000;
  for (int i = 0; i < n; ++i) counts[rng.uniform_int(5)]++;
  for (int c : counts) {
    CHECK(c > n / 5 - 1000);
    CHECK(c < n / 5 + 1000);
  }
}

TEST_CASE("sample without replacement yields distinct valid indices") {
  lrtd::Rng rng(3);
  auto picks = rng.sample_without_replacement(10, 4);
  REQUIRE(picks.size() == 4);
  std::vector<bool> seen(10, false);
  for (int p : picks) {
    REQUIRE(p >= 0);
    REQUIRE(p < 10);
    CHECK(!seen[p]);
    seen[p] = true;
  }
}

TEST_CASE("shuffle permutes without loss") {
  lrtd::Rng rng(9);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
  rng.shuffle(v);
  std::vector<bool> seen(8, false);
  for (int x : v) {
    REQUIRE(x >= 0);
    REQUIRE(x < 8);
    seen[x] = true;
  }
  for (bool s : seen) CHECK(s);
}

TEST_CASE("seed mixing separates nearby inputs") {
  auto a = lrtd::seed_mix(1, 0);
  auto b = lrtd::seed_mix(1, 1);
  auto c = lrtd::seed_mix(2, 0);
  CHECK(a != b);
  CHECK(a != c);
  CHECK(b != c);
  CHECK(lrtd::seed_mix(1, 0) == a);
}

TEST_CASE("string hash is stable") {
  auto h1 = lrtd::hash_str("video_01");
  auto h2 = lrtd::hash_str("video_01");
  auto h3 = lrtd::hash_str("video_02");
  CHECK(h1 == h2);
  CHECK(h1 != h3);
}
