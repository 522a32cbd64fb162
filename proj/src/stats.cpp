#include "lrtd/stats.hpp"

#include <algorithm>
#include <cmath>

#include "lrtd/errors.hpp"

namespace lrtd {

namespace {

constexpr double kDegenerateSd = 1e-12;

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;

  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw NumericError("incomplete_beta: continued fraction did not converge");
}

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0))
    throw ValidationError("incomplete_beta: parameters must be positive");
  if (!(x >= 0.0) || !(x <= 1.0)) throw ValidationError("incomplete_beta: x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double paired_significance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw ValidationError("paired_significance: sample sizes differ (" + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()) + ")");
  const std::size_t n = a.size();
  if (n < 2) throw ValidationError("paired_significance: need at least 2 pairs");

  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0) {
    if (mean == 0.0) return 1.0;
    sd = kDegenerateSd;
  }
  const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
  const double nu = static_cast<double>(n - 1);
  const double p = incomplete_beta(nu / 2.0, 0.5, nu / (nu + t * t));
  return std::min(1.0, std::max(0.0, p));
}

double rank_sum_p(const std::vector<double>& lo, const std::vector<double>& hi) {
  const std::size_t n1 = lo.size(), n2 = hi.size();
  if (n1 == 0 || n2 == 0) throw ValidationError("rank_sum_p: both samples must be nonempty");
  const std::size_t n = n1 + n2;

  std::vector<std::pair<double, int>> all;
  all.reserve(n);
  for (double v : lo) all.emplace_back(v, 0);
  for (double v : hi) all.emplace_back(v, 1);
  std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) { return x.first < y.first; });

  double r1 = 0.0;
  double tie_term = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && all[j].first == all[i].first) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based average
    for (std::size_t k = i; k < j; ++k)
      if (all[k].second == 0) r1 += avg_rank;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }

  const double u1 = r1 - static_cast<double>(n1) * (n1 + 1) / 2.0;
  const double mu = static_cast<double>(n1) * static_cast<double>(n2) / 2.0;
  const double var = static_cast<double>(n1) * static_cast<double>(n2) / 12.0 *
                     (static_cast<double>(n + 1) -
                      tie_term / (static_cast<double>(n) * static_cast<double>(n - 1)));
  if (var <= 0.0) return 1.0;  // every observation tied: no ordering information
  const double z = (u1 - mu + 0.5) / std::sqrt(var);
  return std_normal_cdf(z);
}

}  // namespace lrtd
