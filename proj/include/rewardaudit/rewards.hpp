#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rewardaudit/corpus.hpp"
#include "rewardaudit/scoring.hpp"

namespace rewardaudit::rewards {

// DPO implicit reward of a completion: beta * (log pi_theta - log pi_ref).
double implicit_reward(double policy_logprob, double reference_logprob, double beta = 1.0);

enum class Selection { chosen, rejected, tie };

std::string_view to_string(Selection s);
Selection selection_from_string(std::string_view s);

struct RewardComparison {
  std::string pair_id;
  std::string chosen_group;
  std::string rejected_group;
  double r_chosen = 0;         // implicit reward of the chosen-side completion
  double r_rejected = 0;       // implicit reward of the rejected-side completion
  double ref_log_ratio = 0;    // log pi_ref(y_c|x) - log pi_ref(y_r|x)
  Selection selection = Selection::tie;
  // Per-token-mean diagnostics; never used for selection.
  double chosen_policy_lp_mean = 0;
  double rejected_policy_lp_mean = 0;

  std::optional<std::string> selected_group() const;
  // Reference log-ratio oriented toward `group`: positive means the reference
  // model prefers that group's completion.
  double ref_log_ratio_toward(std::string_view group) const;
};

struct PairScores {
  scoring::LogProbRecord policy_chosen;
  scoring::LogProbRecord policy_rejected;
  scoring::LogProbRecord reference_chosen;
  scoring::LogProbRecord reference_rejected;
};

// Selection is computed on the beta-free log-ratio difference, which equals
// the reward argmax for every beta > 0, making beta-invariance structural.
RewardComparison compare_pair(const corpus::MockPreferencePair& pair, const PairScores& scores, double beta);

RewardComparison compare_logprobs(std::string pair_id, std::string chosen_group, std::string rejected_group,
                                  double policy_chosen_lp, double reference_chosen_lp, double policy_rejected_lp,
                                  double reference_rejected_lp, double beta = 1.0);

struct BootstrapParams {
  int n_boot = 10000;
  double level = 0.95;
  std::uint64_t seed = 0;
};

struct SelectionRateResult {
  double rate = 0;  // percent, ties get half credit
  double ci_low = 0;
  double ci_high = 0;
  long n_pairs = 0;
  int n_boot = 0;
  std::uint64_t seed = 0;
  bool significant_vs_baseline = false;  // CI excludes 50
};

SelectionRateResult selection_rate(std::span<const RewardComparison> comparisons, std::string_view target_group,
                                   const BootstrapParams& params = {});

// "91.53 [91.08, 91.97]" (two decimals).
std::string format_rate_with_ci(const SelectionRateResult& result);

struct CorrelationResult {
  double r_pb = 0;
  double p_value = 1.0;
  long n = 0;
};

// Point-biserial correlation between continuous ratios and a binary
// selection indicator; p two-sided via the t statistic with n-2 df.
// Ties must be excluded upstream.
CorrelationResult point_biserial(std::span<const double> ref_log_ratios, std::span<const int> selected);

struct AgreementResult {
  std::string model_a;
  std::string model_b;
  double kappa = 0;
  long n = 0;
};

// Cohen's kappa over the 2x2 contingency table; 1.0 when expected agreement
// is 1 (possible only for identical degenerate lists).
double cohen_kappa(std::span<const int> a, std::span<const int> b);

AgreementResult agreement(std::string model_a, std::span<const int> selections_a, std::string model_b,
                          std::span<const int> selections_b);

struct BinomialTestResult {
  double p_value = 1.0;
  long k = 0;  // target-group selections among non-ties
  long n = 0;  // non-tie comparisons
  bool significant = false;
};

// Exact two-sided binomial test of the non-tie selections against the 50%
// random-preference baseline.
BinomialTestResult baseline_significance(std::span<const RewardComparison> comparisons, std::string_view target_group,
                                         double alpha = 0.05);

// --- persistence (line-delimited comparison records) ---------------------

nlohmann::json to_json(const RewardComparison& comparison);
RewardComparison comparison_from_json(const nlohmann::json& j);

}  // namespace rewardaudit::rewards
