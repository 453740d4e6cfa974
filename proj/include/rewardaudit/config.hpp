#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rewardaudit/corpus.hpp"
#include "rewardaudit/regard.hpp"
#include "rewardaudit/rewards.hpp"
#include "rewardaudit/scoring.hpp"

namespace rewardaudit::config {

using json = nlohmann::json;

// A backend description as it appears in the config file, e.g.
//   {"kind": "stub-hash", "model_id": "demo", "seed": 11, "context_window": 1}
//   {"kind": "remote", "endpoint": "${SCORER_ENDPOINT}", "model_id": "pythia-2.8b-dpo"}
struct BackendSpec {
  json spec;

  std::string kind() const;
  std::string model_id() const;  // explicit, or synthesized from a digest of the json
};

struct ModelSpec {
  std::string name;
  BackendSpec policy;
  BackendSpec reference;
};

struct RewardAuditConfig {
  std::filesystem::path dataset_path;
  corpus::TableSpec table;
  std::filesystem::path lexicons_path;
  std::string group_a;
  std::string group_b;
  std::string target_group;
  std::string prompt_format = std::string(corpus::kDefaultPromptFormat);
  corpus::PromptOrder prompt_order = corpus::PromptOrder::alphabetical;
  std::vector<ModelSpec> models;
  scoring::ScoringParams scoring_params;
  int context_limit = 4096;
  int batch_size = 64;
  bool use_cache = true;
  rewards::BootstrapParams bootstrap;
  double alpha = 0.05;
  int annotation_sample_n = 100;
  std::uint64_t annotation_seed = 0;
};

struct GenerationStageSpec {
  std::string name;
  BackendSpec generator;
  bool is_base = false;
};

struct GenerationAuditConfig {
  std::filesystem::path names_path;
  std::filesystem::path identities_path;
  std::filesystem::path forms_path;
  std::vector<GenerationStageSpec> stages;
  BackendSpec classifier;
  std::optional<BackendSpec> toxicity;
  scoring::GenerationConfig generation;
  double jaccard_threshold = 0.4;
  double shift_threshold = 0.75;
  double toxicity_threshold = 0.5;
  int shift_sample_n = 100;
  std::uint64_t shift_sample_seed = 0;
  regard::ShiftMetric shift_metric = regard::ShiftMetric::probability;
  rewards::BootstrapParams bootstrap;
};

struct ScanConfig {
  struct Dataset {
    std::string name;
    std::filesystem::path path;
  };
  std::vector<Dataset> datasets;
  std::filesystem::path terms_path;
  std::size_t excerpt_window = 60;
};

struct AuditConfig {
  std::optional<RewardAuditConfig> rewards;
  std::optional<GenerationAuditConfig> generations;
  std::optional<ScanConfig> scan;
  std::filesystem::path output_dir = "out";
  std::string config_digest;  // over the canonical config minus output_dir
  json raw;                   // env-interpolated source document
  std::filesystem::path base_dir;  // directory of the config file; relative paths resolve against it
};

// Parse + env-interpolate + digest. Does not touch referenced paths.
AuditConfig parse_config(const std::filesystem::path& path);
AuditConfig parse_config_json(json document, const std::filesystem::path& base_dir);

// Path existence and threshold-range checks.
void validate_config(const AuditConfig& config);

// --- backend factories ----------------------------------------------------

std::unique_ptr<scoring::Scorer> make_scorer(const BackendSpec& spec, scoring::Role role, int context_limit,
                                             const std::filesystem::path& base_dir = {});
std::unique_ptr<scoring::Generator> make_generator(const BackendSpec& spec,
                                                   const std::filesystem::path& base_dir = {});
std::unique_ptr<regard::RegardClassifier> make_regard_classifier(const BackendSpec& spec,
                                                                 const std::filesystem::path& base_dir = {});
std::unique_ptr<regard::ToxicityScorer> make_toxicity_scorer(const BackendSpec& spec,
                                                             const std::filesystem::path& base_dir = {});

}  // namespace rewardaudit::config
