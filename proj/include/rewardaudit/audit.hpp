#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "rewardaudit/cache.hpp"
#include "rewardaudit/config.hpp"
#include "rewardaudit/report.hpp"

namespace rewardaudit::audit {

struct RunOptions {
  std::filesystem::path output_dir;
  std::string stage = "all";  // all | pairs | score | generate | stats
  bool resume = false;
  std::function<void(const std::string&)> log;  // progress sink, may be null
};

// Output-directory layout:
//   audit_config.json                       copy of the config (+ base dir)
//   manifest.json                           run metadata, input digests, wall time
//   cache/scores.jsonl                      append-only score cache
//   rewards/pairs.jsonl                     mock preference pairs
//   rewards/rejects.jsonl                   per-row parse failures
//   rewards/<model>/comparisons.jsonl       persisted reward comparisons
//   rewards/<model>/annotation_sample.csv   stigma texts sampled for annotation
//   generations/<stage>/samples.jsonl       generations + jaccard + regard (+ toxicity)
//   generations/<stage>/run.json            stage run metadata
//   generations/shift_sample_<stage>.csv    shift candidates sampled for annotation
//   scan/<dataset>_matches.jsonl            corpus scan matches
//   scan/summary.json                       scan counts
//   report/                                 emitted report files

report::RewardSection run_reward_audit(const config::AuditConfig& config, const RunOptions& options);
report::GenerationSection run_generation_audit(const config::AuditConfig& config, const RunOptions& options);
report::ScanSection run_scan(const config::AuditConfig& config, const RunOptions& options);

// Stats recomputed purely from persisted intermediates; no model backend is
// touched.
report::RewardSection compute_reward_section(const config::AuditConfig& config,
                                             const std::filesystem::path& out_dir);
report::GenerationSection compute_generation_section(const config::AuditConfig& config,
                                                     const std::filesystem::path& out_dir);
report::ScanSection load_scan_section(const std::filesystem::path& out_dir);

bool reward_intermediates_present(const config::AuditConfig& config, const std::filesystem::path& out_dir);
bool generation_intermediates_present(const config::AuditConfig& config, const std::filesystem::path& out_dir);
bool scan_intermediates_present(const std::filesystem::path& out_dir);

// Assembles a report from whatever intermediates exist for this config.
report::AuditReport build_report(const config::AuditConfig& config, const std::filesystem::path& out_dir);

// Ingest annotator-labeled CSVs; sample ids are validated against every
// annotation sample exported under out_dir.
report::ThemeSection ingest_themes(const std::filesystem::path& out_dir,
                                   const std::vector<std::filesystem::path>& annotation_files,
                                   const std::filesystem::path& taxonomy_path);

void persist_config(const config::AuditConfig& config, const std::filesystem::path& out_dir);
config::AuditConfig load_persisted_config(const std::filesystem::path& out_dir);

// Mock-preference-pair JSONL codecs (shared with tests and tools).
nlohmann::json pair_to_json(const corpus::MockPreferencePair& pair);
corpus::MockPreferencePair pair_from_json(const nlohmann::json& j);
std::vector<corpus::MockPreferencePair> load_pairs(const std::filesystem::path& path);

}  // namespace rewardaudit::audit
