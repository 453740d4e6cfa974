#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rewardaudit/audit.hpp"
#include "rewardaudit/config.hpp"
#include "rewardaudit/errors.hpp"
#include "rewardaudit/report.hpp"

namespace {

namespace ra = rewardaudit;

struct CommonArgs {
  std::string config_path;
  std::string output_dir;
  std::string stage = "all";
  std::string format = "json,csv,markdown,plots";
  bool resume = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_config) {
  if (needs_config) {
    cmd->add_option("--config", args.config_path, "Audit config file (JSON)")->required();
  } else {
    cmd->add_option("--config", args.config_path, "Audit config file (JSON); defaults to the persisted copy");
  }
  cmd->add_option("--output-dir", args.output_dir, "Output directory (overrides the config)");
  cmd->add_option("--format", args.format, "Report formats: json,csv,markdown,plots");
}

ra::audit::RunOptions make_options(const CommonArgs& args, const ra::config::AuditConfig& config) {
  ra::audit::RunOptions options;
  options.output_dir = args.output_dir.empty() ? config.output_dir : std::filesystem::path(args.output_dir);
  options.stage = args.stage;
  options.resume = args.resume;
  options.log = [](const std::string& line) { std::cerr << line << "\n"; };
  return options;
}

void emit(const ra::config::AuditConfig& config, const ra::audit::RunOptions& options, const std::string& format) {
  ra::report::AuditReport report = ra::audit::build_report(config, options.output_dir);
  auto files = ra::report::emit_report(report, options.output_dir, ra::report::parse_formats(format));
  for (const auto& file : files) std::cout << file.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audits preference-aligned causal language models for group-directed bias: "
               "implicit-reward selection rates over mock preference pairs, and regard/toxicity "
               "disparities in generated text."};
  app.require_subcommand(1);

  CommonArgs validate_args;
  auto* validate_cmd = app.add_subcommand("validate-config", "Parse and validate an audit config");
  validate_cmd->add_option("--config", validate_args.config_path, "Audit config file (JSON)")->required();

  CommonArgs rewards_args;
  auto* rewards_cmd = app.add_subcommand("audit-rewards", "Extract implicit rewards over mock preference pairs");
  add_common(rewards_cmd, rewards_args, true);
  rewards_cmd->add_option("--stage", rewards_args.stage, "Pipeline stage: all|pairs|score|stats")
      ->check(CLI::IsMember({"all", "pairs", "score", "stats"}));
  rewards_cmd->add_flag("--resume", rewards_args.resume, "Reuse persisted pairs/comparisons and cached scores");

  CommonArgs generations_args;
  auto* generations_cmd = app.add_subcommand("audit-generations", "Generation-side regard audit");
  add_common(generations_cmd, generations_args, true);
  generations_cmd->add_option("--stage", generations_args.stage, "Pipeline stage: all|generate|stats")
      ->check(CLI::IsMember({"all", "generate", "stats"}));
  generations_cmd->add_flag("--resume", generations_args.resume, "Reuse persisted per-stage samples");

  CommonArgs scan_args;
  auto* scan_cmd = app.add_subcommand("scan-corpus", "Scan preference corpora for target terms");
  add_common(scan_cmd, scan_args, true);

  CommonArgs report_args;
  std::vector<std::string> annotation_files;
  std::string taxonomy_path;
  auto* report_cmd =
      app.add_subcommand("report", "Regenerate the report from persisted intermediates (no model backends)");
  add_common(report_cmd, report_args, false);
  report_cmd->add_option("--annotations", annotation_files, "Annotator-labeled CSV file(s) to ingest");
  report_cmd->add_option("--taxonomy", taxonomy_path, "Theme taxonomy file (one theme per line)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate_cmd->parsed()) {
      ra::config::AuditConfig config = ra::config::parse_config(validate_args.config_path);
      ra::config::validate_config(config);
      std::cout << "ok " << config.config_digest << "\n";
      if (config.rewards) std::cout << "rewards: " << config.rewards->models.size() << " model(s)\n";
      if (config.generations) std::cout << "generations: " << config.generations->stages.size() << " stage(s)\n";
      if (config.scan) std::cout << "scan: " << config.scan->datasets.size() << " dataset(s)\n";
      return 0;
    }

    if (rewards_cmd->parsed()) {
      ra::config::AuditConfig config = ra::config::parse_config(rewards_args.config_path);
      ra::config::validate_config(config);
      auto options = make_options(rewards_args, config);
      ra::audit::run_reward_audit(config, options);
      if (options.stage == "all" || options.stage == "stats") emit(config, options, rewards_args.format);
      return 0;
    }

    if (generations_cmd->parsed()) {
      ra::config::AuditConfig config = ra::config::parse_config(generations_args.config_path);
      ra::config::validate_config(config);
      auto options = make_options(generations_args, config);
      ra::audit::run_generation_audit(config, options);
      if (options.stage == "all" || options.stage == "stats") emit(config, options, generations_args.format);
      return 0;
    }

    if (scan_cmd->parsed()) {
      ra::config::AuditConfig config = ra::config::parse_config(scan_args.config_path);
      ra::config::validate_config(config);
      auto options = make_options(scan_args, config);
      ra::audit::run_scan(config, options);
      emit(config, options, scan_args.format);
      return 0;
    }

    if (report_cmd->parsed()) {
      std::filesystem::path out_dir;
      ra::config::AuditConfig config;
      if (!report_args.config_path.empty()) {
        config = ra::config::parse_config(report_args.config_path);
        out_dir = report_args.output_dir.empty() ? config.output_dir : std::filesystem::path(report_args.output_dir);
      } else {
        if (report_args.output_dir.empty()) {
          std::cerr << "report needs --output-dir (or --config)\n";
          return 2;
        }
        out_dir = report_args.output_dir;
        config = ra::audit::load_persisted_config(out_dir);
      }
      ra::report::AuditReport report = ra::audit::build_report(config, out_dir);
      if (!annotation_files.empty()) {
        if (taxonomy_path.empty()) {
          std::cerr << "--annotations needs --taxonomy\n";
          return 2;
        }
        std::vector<std::filesystem::path> files(annotation_files.begin(), annotation_files.end());
        report.themes = ra::audit::ingest_themes(out_dir, files, taxonomy_path);
      }
      auto files = ra::report::emit_report(report, out_dir, ra::report::parse_formats(report_args.format));
      for (const auto& file : files) std::cout << file.string() << "\n";
      return 0;
    }
  } catch (const ra::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
