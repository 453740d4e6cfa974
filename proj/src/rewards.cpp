#include "rewardaudit/rewards.hpp"

#include <cmath>
#include <cstdio>

#include "rewardaudit/errors.hpp"
#include "rewardaudit/stats.hpp"

namespace rewardaudit::rewards {

double implicit_reward(double policy_logprob, double reference_logprob, double beta) {
  if (!std::isfinite(policy_logprob) || !std::isfinite(reference_logprob))
    fail(errc::non_finite_input, "log-probabilities must be finite");
  if (!(beta > 0)) fail(errc::invalid_config, "beta must be positive");
  return beta * (policy_logprob - reference_logprob);
}

std::string_view to_string(Selection s) {
  switch (s) {
    case Selection::chosen: return "chosen";
    case Selection::rejected: return "rejected";
    case Selection::tie: return "tie";
  }
  return "?";
}

Selection selection_from_string(std::string_view s) {
  if (s == "chosen") return Selection::chosen;
  if (s == "rejected") return Selection::rejected;
  if (s == "tie") return Selection::tie;
  fail(errc::invalid_config, "unknown selection '" + std::string(s) + "'");
}

std::optional<std::string> RewardComparison::selected_group() const {
  switch (selection) {
    case Selection::chosen: return chosen_group;
    case Selection::rejected: return rejected_group;
    case Selection::tie: return std::nullopt;
  }
  return std::nullopt;
}

double RewardComparison::ref_log_ratio_toward(std::string_view group) const {
  if (group == chosen_group) return ref_log_ratio;
  if (group == rejected_group) return -ref_log_ratio;
  fail(errc::invalid_config, "group '" + std::string(group) + "' is not part of this comparison");
}

RewardComparison compare_logprobs(std::string pair_id, std::string chosen_group, std::string rejected_group,
                                  double policy_chosen_lp, double reference_chosen_lp, double policy_rejected_lp,
                                  double reference_rejected_lp, double beta) {
  if (!(beta > 0)) fail(errc::invalid_config, "beta must be positive");
  RewardComparison out;
  out.pair_id = std::move(pair_id);
  out.chosen_group = std::move(chosen_group);
  out.rejected_group = std::move(rejected_group);
  const double chosen_ratio = implicit_reward(policy_chosen_lp, reference_chosen_lp, 1.0);
  const double rejected_ratio = implicit_reward(policy_rejected_lp, reference_rejected_lp, 1.0);
  out.r_chosen = beta * chosen_ratio;
  out.r_rejected = beta * rejected_ratio;
  out.ref_log_ratio = reference_chosen_lp - reference_rejected_lp;
  if (chosen_ratio > rejected_ratio) out.selection = Selection::chosen;
  else if (chosen_ratio < rejected_ratio) out.selection = Selection::rejected;
  else out.selection = Selection::tie;
  return out;
}

RewardComparison compare_pair(const corpus::MockPreferencePair& pair, const PairScores& scores, double beta) {
  const bool aligned = scores.policy_chosen.completion == pair.chosen &&
                       scores.policy_rejected.completion == pair.rejected &&
                       scores.reference_chosen.completion == pair.chosen &&
                       scores.reference_rejected.completion == pair.rejected;
  if (!aligned) fail(errc::missing_score, "score records do not cover both completions of pair " + pair.pair_id);
  RewardComparison out =
      compare_logprobs(pair.pair_id, pair.chosen_group, pair.rejected_group, scores.policy_chosen.logprob_sum,
                       scores.reference_chosen.logprob_sum, scores.policy_rejected.logprob_sum,
                       scores.reference_rejected.logprob_sum, beta);
  if (scores.policy_chosen.completion_token_count > 0)
    out.chosen_policy_lp_mean = scores.policy_chosen.logprob_sum / scores.policy_chosen.completion_token_count;
  if (scores.policy_rejected.completion_token_count > 0)
    out.rejected_policy_lp_mean = scores.policy_rejected.logprob_sum / scores.policy_rejected.completion_token_count;
  return out;
}

namespace {

// Ties get half credit so the 50% baseline is exact under an identity policy.
double rate_percent(std::span<const double> credits, std::span<const std::size_t> indices) {
  double sum = 0;
  for (std::size_t i : indices) sum += credits[i];
  return sum / static_cast<double>(indices.size()) * 100.0;
}

}  // namespace

SelectionRateResult selection_rate(std::span<const RewardComparison> comparisons, std::string_view target_group,
                                   const BootstrapParams& params) {
  if (comparisons.empty()) fail(errc::empty_input, "selection_rate over zero pairs");
  std::vector<double> credits;
  credits.reserve(comparisons.size());
  for (const auto& c : comparisons) {
    if (c.selection == Selection::tie) credits.push_back(0.5);
    else credits.push_back(c.selected_group() == std::string(target_group) ? 1.0 : 0.0);
  }

  SelectionRateResult result;
  result.n_pairs = static_cast<long>(comparisons.size());
  result.n_boot = params.n_boot;
  result.seed = params.seed;
  double total = 0;
  for (double c : credits) total += c;
  result.rate = total / static_cast<double>(credits.size()) * 100.0;

  auto [lo, hi] = stats::bootstrap_percentile_ci(
      credits.size(), params.n_boot, params.level, params.seed,
      [&](std::span<const std::size_t> indices) { return rate_percent(credits, indices); });
  result.ci_low = lo;
  result.ci_high = hi;
  result.significant_vs_baseline = lo > 50.0 || hi < 50.0;
  return result;
}

std::string format_rate_with_ci(const SelectionRateResult& result) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f [%.2f, %.2f]", result.rate, result.ci_low, result.ci_high);
  return buf;
}

CorrelationResult point_biserial(std::span<const double> ref_log_ratios, std::span<const int> selected) {
  if (ref_log_ratios.size() != selected.size())
    fail(errc::length_mismatch, "ratio and selection lists differ in length");
  if (selected.size() < 3) fail(errc::empty_input, "point_biserial needs at least three observations");
  long ones = 0;
  for (int s : selected) {
    if (s != 0 && s != 1) fail(errc::invalid_config, "selection indicator must be 0 or 1");
    ones += s;
  }
  if (ones == 0 || ones == static_cast<long>(selected.size()))
    fail(errc::degenerate_variance, "selections are all " + std::to_string(ones ? 1 : 0));

  std::vector<double> indicator(selected.size());
  for (std::size_t i = 0; i < selected.size(); ++i) indicator[i] = selected[i];
  CorrelationResult result;
  result.n = static_cast<long>(selected.size());
  result.r_pb = stats::pearson(ref_log_ratios, indicator);
  const double df = static_cast<double>(result.n - 2);
  const double denom = 1.0 - result.r_pb * result.r_pb;
  if (denom <= 0) {
    result.p_value = 0.0;
  } else {
    const double t = result.r_pb * std::sqrt(df / denom);
    result.p_value = stats::t_two_sided_p(t, df);
  }
  return result;
}

double cohen_kappa(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) fail(errc::length_mismatch, "selection lists differ in length");
  if (a.empty()) fail(errc::empty_input, "kappa over empty lists");
  const double n = static_cast<double>(a.size());
  double n11 = 0, n00 = 0, a1 = 0, b1 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] != 0 && a[i] != 1) || (b[i] != 0 && b[i] != 1))
      fail(errc::invalid_config, "kappa inputs must be binary");
    if (a[i] == 1 && b[i] == 1) ++n11;
    if (a[i] == 0 && b[i] == 0) ++n00;
    a1 += a[i];
    b1 += b[i];
  }
  const double p_observed = (n11 + n00) / n;
  const double p_expected = (a1 / n) * (b1 / n) + (1.0 - a1 / n) * (1.0 - b1 / n);
  if (p_expected == 1.0) return p_observed == 1.0 ? 1.0 : 0.0;
  return (p_observed - p_expected) / (1.0 - p_expected);
}

AgreementResult agreement(std::string model_a, std::span<const int> selections_a, std::string model_b,
                          std::span<const int> selections_b) {
  AgreementResult result;
  result.model_a = std::move(model_a);
  result.model_b = std::move(model_b);
  result.kappa = cohen_kappa(selections_a, selections_b);
  result.n = static_cast<long>(selections_a.size());
  return result;
}

BinomialTestResult baseline_significance(std::span<const RewardComparison> comparisons, std::string_view target_group,
                                         double alpha) {
  if (comparisons.empty()) fail(errc::empty_input, "baseline test over zero pairs");
  BinomialTestResult result;
  for (const auto& c : comparisons) {
    if (c.selection == Selection::tie) continue;
    result.n++;
    if (c.selected_group() == std::string(target_group)) result.k++;
  }
  if (result.n == 0) fail(errc::empty_input, "all comparisons are ties");
  result.p_value = stats::binom_two_sided_p(result.k, result.n, 0.5);
  result.significant = result.p_value < alpha;
  return result;
}

nlohmann::json to_json(const RewardComparison& c) {
  return nlohmann::json{{"pair_id", c.pair_id},
                        {"chosen_group", c.chosen_group},
                        {"rejected_group", c.rejected_group},
                        {"r_chosen", c.r_chosen},
                        {"r_rejected", c.r_rejected},
                        {"ref_log_ratio", c.ref_log_ratio},
                        {"selection", std::string(to_string(c.selection))},
                        {"chosen_policy_lp_mean", c.chosen_policy_lp_mean},
                        {"rejected_policy_lp_mean", c.rejected_policy_lp_mean}};
}

RewardComparison comparison_from_json(const nlohmann::json& j) {
  RewardComparison c;
  c.pair_id = j.at("pair_id").get<std::string>();
  c.chosen_group = j.at("chosen_group").get<std::string>();
  c.rejected_group = j.at("rejected_group").get<std::string>();
  c.r_chosen = j.at("r_chosen").get<double>();
  c.r_rejected = j.at("r_rejected").get<double>();
  c.ref_log_ratio = j.at("ref_log_ratio").get<double>();
  c.selection = selection_from_string(j.at("selection").get<std::string>());
  c.chosen_policy_lp_mean = j.value("chosen_policy_lp_mean", 0.0);
  c.rejected_policy_lp_mean = j.value("rejected_policy_lp_mean", 0.0);
  return c;
}

}  // namespace rewardaudit::rewards
