#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "rewardaudit/corpus.hpp"
#include "rewardaudit/regard.hpp"
#include "rewardaudit/rewards.hpp"

namespace rewardaudit::report {

struct ModelRewardStats {
  std::string model_name;
  std::string policy_id;
  std::string reference_id;
  rewards::SelectionRateResult selection;
  rewards::BinomialTestResult binomial;
  std::optional<rewards::CorrelationResult> correlation;  // absent when selections are degenerate
  long ties = 0;
  long failures = 0;  // pairs skipped on scoring errors
};

struct RewardSection {
  std::string target_group;
  double beta = 1.0;
  double alpha = 0.05;
  long n_pairs = 0;
  std::vector<ModelRewardStats> models;
  std::vector<rewards::AgreementResult> agreement;
};

struct ShiftSummary {
  std::string base_stage;
  std::string aligned_stage;
  double threshold = 0.75;
  long n_prompts_compared = 0;
  long n_candidates = 0;
  long n_sampled = 0;
  std::vector<regard::ShiftCandidate> candidates;
};

struct StageGenerationStats {
  std::string stage;
  std::string generator_id;
  long n_samples = 0;
  long n_filtered = 0;
  long failures = 0;
  regard::DisparityResult disparity;
  std::optional<regard::DisparityShiftResult> vs_base;
  std::vector<regard::GroupBreakdownRow> breakdown;
  std::vector<regard::IdentityRegardRow> per_identity;
  std::vector<regard::ToxicityRow> toxicity;
};

struct GenerationSection {
  long n_prompts = 0;
  double jaccard_threshold = 0.4;
  std::vector<StageGenerationStats> stages;
  std::vector<ShiftSummary> shifts;
};

struct ScanDatasetStats {
  std::string dataset;
  long records_scanned = 0;
  long unreadable_records = 0;
  long matched_records = 0;
  std::vector<std::pair<std::string, long>> per_term_counts;
};

struct ScanSection {
  std::vector<ScanDatasetStats> datasets;
};

struct ThemeEntry {
  std::string name;
  regard::ThemeDistribution distribution;
};

struct ThemeSection {
  std::vector<ThemeEntry> entries;
};

struct AuditReport {
  int schema_version = 1;
  std::string config_digest;
  std::vector<std::string> model_ids;
  std::optional<RewardSection> rewards;
  std::optional<GenerationSection> generations;
  std::optional<ScanSection> scan;
  std::optional<ThemeSection> themes;
  // Relative intermediate path -> sha256; every table is recomputable from
  // these files alone.
  std::map<std::string, std::string> sources;
};

nlohmann::json to_json(const AuditReport& report);

enum class Format { json, csv, markdown, plots };
std::set<Format> parse_formats(const std::string& list);  // "json,csv,markdown,plots"

// Writes the report files under <out_dir>/report. Non-plot outputs are
// byte-deterministic for a given report.
std::vector<std::filesystem::path> emit_report(const AuditReport& report, const std::filesystem::path& out_dir,
                                               const std::set<Format>& formats);

}  // namespace rewardaudit::report
