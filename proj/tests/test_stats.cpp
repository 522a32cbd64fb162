#include <doctest.h>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <vector>

#include "lrtd/errors.hpp"
#include "lrtd/rng.hpp"
#include "lrtd/stats.hpp"

using namespace lrtd;

TEST_CASE("incomplete beta matches closed forms") {
  for (double x : {0.0, 0.1, 0.35, 0.5, 0.77, 1.0}) {
    CHECK(incomplete_beta(1.0, 1.0, x) == doctest::Approx(x).epsilon(1e-12));
    CHECK(incomplete_beta(2.0, 1.0, x) == doctest::Approx(x * x).epsilon(1e-12));
    CHECK(incomplete_beta(1.0, 3.0, x) ==
          doctest::Approx(1.0 - std::pow(1.0 - x, 3.0)).epsilon(1e-12));
  }
  CHECK(incomplete_beta(7.5, 0.5, 0.0) == 0.0);
  CHECK(incomplete_beta(7.5, 0.5, 1.0) == 1.0);
}

TEST_CASE("incomplete beta obeys the reflection identity") {
  for (double a : {0.5, 2.0, 9.5}) {
    for (double b : {0.5, 3.0, 11.0}) {
      for (double x : {0.01, 0.2, 0.5, 0.8, 0.99}) {
        CHECK(incomplete_beta(a, b, x) ==
              doctest::Approx(1.0 - incomplete_beta(b, a, 1.0 - x)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("incomplete beta matches an independent reference") {
  for (double a : {0.5, 1.0, 2.5, 5.0, 20.0, 50.0}) {
    for (double b : {0.5, 1.0, 2.5, 5.0, 20.0}) {
      for (double x : {0.001, 0.1, 0.3, 0.5, 0.7, 0.9, 0.999}) {
        const double ref = boost::math::ibeta(a, b, x);
        CHECK(incomplete_beta(a, b, x) == doctest::Approx(ref).epsilon(1e-10));
      }
    }
  }
  CHECK_THROWS_AS(incomplete_beta(0.0, 1.0, 0.5), ValidationError);
  CHECK_THROWS_AS(incomplete_beta(1.0, 1.0, -0.1), ValidationError);
  CHECK_THROWS_AS(incomplete_beta(1.0, 1.0, 1.5), ValidationError);
}

TEST_CASE("identical samples give p = 1") {
  std::vector<double> a{0.4, 0.7, 0.9, 0.2};
  CHECK(paired_significance(a, a) == 1.0);
}

TEST_CASE("a constant shift with no variance forces p to zero") {
  std::vector<double> a(40), b(40);
  for (int i = 0; i < 40; ++i) {
    b[i] = 0.01 * i;
    a[i] = b[i] + 10.0;
  }
  CHECK(paired_significance(a, b) < 1e-12);
}

TEST_CASE("paired test rejects degenerate inputs") {
  CHECK_THROWS_AS(paired_significance({1.0}, {2.0}), ValidationError);
  CHECK_THROWS_AS(paired_significance({1.0, 2.0}, {2.0}), ValidationError);
  CHECK_THROWS_AS(paired_significance({}, {}), ValidationError);
}

TEST_CASE("paired test reproduces frozen reference p-values") {
  // d = [1..5]: t = 4.242640687119285, nu = 4.
  std::vector<double> a{1, 2, 3, 4, 5}, zero(5, 0.0);
  CHECK(paired_significance(a, zero) == doctest::Approx(0.013235599563682695).epsilon(1e-9));
  std::vector<double> c{2.0, 4.0, 3.0, 5.0, 7.0, 6.0};
  std::vector<double> d{1.5, 4.2, 2.0, 4.0, 6.9, 5.0};
  CHECK(paired_significance(c, d) == doctest::Approx(0.045508327874777654).epsilon(1e-9));
}

TEST_CASE("paired test matches the t distribution on random samples") {
  Rng rng(321);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 40;
    std::vector<double> a(n), b(n);
    for (int i = 0; i < n; ++i) {
      b[i] = rng.normal();
      a[i] = b[i] + 0.3 * rng.normal() + 0.1;
    }
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= n;
    double ss = 0.0;
    for (int i = 0; i < n; ++i) ss += (a[i] - b[i] - mean) * (a[i] - b[i] - mean);
    const double sd = std::sqrt(ss / (n - 1));
    const double t = mean / (sd / std::sqrt(double(n)));

    boost::math::students_t dist(n - 1);
    const double ref = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
    CHECK(paired_significance(a, b) == doctest::Approx(ref).epsilon(1e-6));
  }
}

TEST_CASE("stronger shifts give smaller p-values") {
  Rng rng(400);
  const int n = 30;
  std::vector<double> b(n);
  for (auto& v : b) v = rng.normal();
  double prev = 1.1;
  for (double shift : {0.0, 0.2, 0.5, 1.0, 2.0}) {
    std::vector<double> a(n);
    for (int i = 0; i < n; ++i) a[i] = b[i] + shift + 0.05 * ((i % 2) ? 1 : -1);
    const double p = paired_significance(a, b);
    CHECK(p <= prev + 1e-12);
    prev = p;
  }
}

TEST_CASE("rank-sum p-values reproduce frozen references") {
  std::vector<double> lo{1.0, 2.0, 2.5, 3.0, 4.0, 5.5, 6.0, 7.5};
  std::vector<double> hi{3.5, 4.5, 5.0, 6.5, 7.0, 8.0, 9.0, 10.0};
  CHECK(rank_sum_p(lo, hi) == doctest::Approx(0.020284427897891328).epsilon(1e-12));

  std::vector<double> lo2{1.0, 2.0, 2.0, 3.0, 3.0, 3.0, 4.0};
  std::vector<double> hi2{2.0, 3.0, 3.0, 4.0, 4.0, 5.0, 5.0, 6.0};
  CHECK(rank_sum_p(lo2, hi2) == doctest::Approx(0.02494221848996294).epsilon(1e-12));

  std::vector<double> same{1.0, 2.0, 3.0};
  CHECK(rank_sum_p(same, same) == doctest::Approx(0.5902615116112394).epsilon(1e-12));
}

TEST_CASE("rank-sum extremes behave directionally") {
  std::vector<double> lo, hi;
  for (int i = 0; i < 25; ++i) {
    lo.push_back(i * 0.1);
    hi.push_back(100.0 + i * 0.1);
  }
  CHECK(rank_sum_p(lo, hi) < 1e-6);
  CHECK(rank_sum_p(hi, lo) > 1.0 - 1e-6);
  std::vector<double> tied(10, 3.0);
  CHECK(rank_sum_p(tied, tied) == 1.0);
  CHECK_THROWS_AS(rank_sum_p({}, {1.0}), ValidationError);
}

TEST_CASE("rank-sum approximation tracks exact enumeration") {
  // Exhaustive permutation distribution of U for small tie-free samples.
  Rng rng(555);
  for (int trial = 0; trial < 5; ++trial) {
    const int n1 = 7, n2 = 7, n = n1 + n2;
    std::vector<double> vals(n);
    for (auto& v : vals) v = rng.normal();
    std::vector<double> lo(vals.begin(), vals.begin() + n1);
    std::vector<double> hi(vals.begin() + n1, vals.end());

    auto u_of = [&](const std::vector<int>& idx) {
      double r1 = 0.0;
      std::vector<double> sorted = vals;
      std::sort(sorted.begin(), sorted.end());
      for (int i : idx) {
        const double v = vals[i];
        r1 += 1 +
              static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin());
      }
      return r1 - n1 * (n1 + 1) / 2.0;
    };
    std::vector<int> base_idx(n1);
    for (int i = 0; i < n1; ++i) base_idx[i] = i;
    const double u_obs = u_of(base_idx);

    int below = 0, total = 0;
    std::vector<int> comb(n1);
    for (int i = 0; i < n1; ++i) comb[i] = i;
    while (true) {
      if (u_of(comb) <= u_obs) ++below;
      ++total;
      int k = n1 - 1;
      while (k >= 0 && comb[k] == n - n1 + k) --k;
      if (k < 0) break;
      ++comb[k];
      for (int j = k + 1; j < n1; ++j) comb[j] = comb[j - 1] + 1;
    }
    const double exact = static_cast<double>(below) / total;
    CHECK(rank_sum_p(lo, hi) == doctest::Approx(exact).epsilon(0.05).scale(1.0));
  }
}
