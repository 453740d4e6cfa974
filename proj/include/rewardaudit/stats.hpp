#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace rewardaudit::stats {

double mean(std::span<const double> xs);

// Sample Pearson correlation; throws DegenerateVariance when either side has
// zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

// Two-sided p for a t statistic with `df` degrees of freedom.
double t_two_sided_p(double t, double df);

// Exact two-sided binomial test (minimum-likelihood method): sums P(X=i) over
// all i whose probability does not exceed P(X=k).
double binom_two_sided_p(long k, long n, double p0 = 0.5);

// Deterministic generator; the project never uses ambient randomness.
inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

// Equal-tail percentile interval over bootstrap replicates: the m-th smallest
// and m-th largest order statistics with m = ceil(B * (1-level)/2).
std::pair<double, double> percentile_interval(std::vector<double> replicates, double level);

// Percentile bootstrap over item indices. `statistic` sees one resampled
// multiset of [0, n) indices per replicate.
std::pair<double, double> bootstrap_percentile_ci(
    std::size_t n, int n_boot, double level, std::uint64_t seed,
    const std::function<double(std::span<const std::size_t>)>& statistic);

}  // namespace rewardaudit::stats
