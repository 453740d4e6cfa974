#include "rewardaudit/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "rewardaudit/errors.hpp"

namespace rewardaudit::stats {

double mean(std::span<const double> xs) {
  if (xs.empty()) fail(errc::empty_input, "mean of empty sample");
  double sum = 0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(errc::length_mismatch, "pearson inputs differ in length");
  if (x.size() < 2) fail(errc::empty_input, "pearson needs at least two observations");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) fail(errc::degenerate_variance, "pearson input has zero variance");
  return sxy / std::sqrt(sxx * syy);
}

double t_two_sided_p(double t, double df) {
  if (!std::isfinite(t)) return 0.0;
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

namespace {

double log_binom_pmf(long k, long n, double p0) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(p0) +
         (n - k) * std::log1p(-p0);
}

}  // namespace

double binom_two_sided_p(long k, long n, double p0) {
  if (n < 1 || k < 0 || k > n) fail(errc::empty_input, "binomial test needs 0 <= k <= n, n >= 1");
  if (p0 <= 0.0 || p0 >= 1.0) fail(errc::invalid_config, "binomial null probability must be in (0,1)");
  // Relative slack absorbs log-space rounding when comparing tail masses,
  // matching the usual minlike implementation.
  const double log_pk = log_binom_pmf(k, n, p0) + 1e-7;
  double p = 0;
  for (long i = 0; i <= n; ++i) {
    if (log_binom_pmf(i, n, p0) <= log_pk) p += std::exp(log_binom_pmf(i, n, p0));
  }
  return std::min(1.0, p);
}

std::pair<double, double> percentile_interval(std::vector<double> replicates, double level) {
  if (replicates.empty()) fail(errc::empty_input, "no bootstrap replicates");
  if (level <= 0.0 || level >= 1.0) fail(errc::invalid_config, "confidence level must be in (0,1)");
  std::sort(replicates.begin(), replicates.end());
  const std::size_t b = replicates.size();
  // the 1e-9 slack keeps exact tail counts (10000 * 0.025 = 250) from
  // rounding up through floating-point noise
  std::size_t m = static_cast<std::size_t>(std::ceil(static_cast<double>(b) * (1.0 - level) / 2.0 - 1e-9));
  if (m < 1) m = 1;
  if (m > b) m = b;
  return {replicates[m - 1], replicates[b - m]};
}

std::pair<double, double> bootstrap_percentile_ci(
    std::size_t n, int n_boot, double level, std::uint64_t seed,
    const std::function<double(std::span<const std::size_t>)>& statistic) {
  if (n == 0) fail(errc::empty_input, "cannot resample an empty sample");
  if (n_boot < 1) fail(errc::invalid_config, "n_boot must be >= 1");
  auto rng = make_rng(seed);
  std::vector<std::size_t> indices(n);
  std::vector<double> replicates;
  replicates.reserve(static_cast<std::size_t>(n_boot));
  for (int b = 0; b < n_boot; ++b) {
    for (std::size_t i = 0; i < n; ++i) indices[i] = static_cast<std::size_t>(rng() % n);
    replicates.push_back(statistic(indices));
  }
  return percentile_interval(std::move(replicates), level);
}

}  // namespace rewardaudit::stats
