#include <doctest.h>

#include <filesystem>

#include "rewardaudit/audit.hpp"
#include "rewardaudit/config.hpp"
#include "rewardaudit/errors.hpp"
#include "rewardaudit/io.hpp"
#include "rewardaudit/remote.hpp"
#include "rewardaudit/report.hpp"

using namespace rewardaudit;
namespace fs = std::filesystem;

namespace {

fs::path fixture(const char* name) { return fs::path(RA_FIXTURE_DIR) / name; }

fs::path temp_dir(const char* name) {
  auto dir = fs::temp_directory_path() / "rewardaudit_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

config::AuditConfig fixture_config() {
  auto cfg = config::parse_config(fixture("audit_fixture.json"));
  config::validate_config(cfg);
  return cfg;
}

audit::RunOptions options_for(const fs::path& out) {
  audit::RunOptions options;
  options.output_dir = out;
  return options;
}

// Small but fully scripted reward audit whose statistics are hand-computable:
// a table backend serves fixed logprobs for every (prompt, completion).
config::AuditConfig scripted_table_config(const fs::path& dir, int biased_pairs, int total_templates) {
  // one-term lexicons: each template yields exactly one pair
  io::write_file(dir / "lexicons.json", R"({"ga": ["alpha"], "gb": ["beta"]})");
  std::string csv = "id,sentence,subject\n";
  for (int i = 0; i < total_templates; ++i) {
    csv += "t" + std::to_string(i) + ",Alpha workers shirk duty " + std::to_string(i) + ".,alpha\n";
  }
  io::write_file(dir / "paired.csv", csv);

  // Build the score tables: policy prefers the alpha completion on the first
  // `biased_pairs` templates and the beta completion elsewhere; the reference
  // model is indifferent shifted.
  std::string policy_rows, reference_rows;
  for (int i = 0; i < total_templates; ++i) {
    std::string chosen = "Alpha workers shirk duty " + std::to_string(i) + ".";
    std::string rejected = "Beta workers shirk duty " + std::to_string(i) + ".";
    std::string prompt = "Between Alpha and Beta, what is more likely?";
    bool biased = i < biased_pairs;
    auto line = [](const std::string& prompt, const std::string& completion, double lp) {
      nlohmann::json j{{"prompt", prompt}, {"completion", completion}, {"logprob_sum", lp}, {"token_count", 5}};
      return j.dump() + "\n";
    };
    policy_rows += line(prompt, chosen, biased ? -4.0 : -9.0);
    policy_rows += line(prompt, rejected, biased ? -9.0 : -4.0);
    reference_rows += line(prompt, chosen, -6.0 - 0.01 * i);
    reference_rows += line(prompt, rejected, -6.0);
  }
  io::write_file(dir / "policy_table.jsonl", policy_rows);
  io::write_file(dir / "reference_table.jsonl", reference_rows);

  nlohmann::json cfg{
      {"output_dir", (dir / "out").string()},
      {"rewards",
       {{"dataset",
         {{"path", (dir / "paired.csv").string()},
          {"sentence_column", "sentence"},
          {"subject_column", "subject"},
          {"id_column", "id"}}},
        {"lexicons", (dir / "lexicons.json").string()},
        {"group_a", "ga"},
        {"group_b", "gb"},
        {"target_group", "ga"},
        {"models",
         {{{"name", "scripted"},
           {"policy", {{"kind", "table"}, {"model_id", "policy-table"}, {"path", (dir / "policy_table.jsonl").string()}}},
           {"reference",
            {{"kind", "table"}, {"model_id", "ref-table"}, {"path", (dir / "reference_table.jsonl").string()}}}}}},
        {"scoring", {{"beta", 0.1}}},
        {"bootstrap", {{"n_boot", 4000}, {"level", 0.95}, {"seed", 77}}}}}};
  io::write_file(dir / "config.json", cfg.dump(2));
  auto parsed = config::parse_config(dir / "config.json");
  config::validate_config(parsed);
  return parsed;
}

}  // namespace

TEST_CASE("config: parse, validate, digest semantics") {
  auto cfg = fixture_config();
  CHECK(cfg.rewards.has_value());
  CHECK(cfg.generations.has_value());
  CHECK(cfg.scan.has_value());
  CHECK(cfg.rewards->models.size() == 2);
  CHECK(cfg.rewards->scoring_params.beta == 0.1);

  // digest ignores output_dir but tracks semantic fields
  auto doc = cfg.raw;
  doc["output_dir"] = "elsewhere";
  auto moved = config::parse_config_json(doc, fixture(""));
  CHECK(moved.config_digest == cfg.config_digest);
  doc["rewards"]["scoring"]["beta"] = 0.2;
  auto changed = config::parse_config_json(doc, fixture(""));
  CHECK(changed.config_digest != cfg.config_digest);

  // env interpolation
  setenv("RA_TEST_GROUP", "groupx", 1);
  doc = cfg.raw;
  doc["rewards"]["target_group"] = "${RA_TEST_GROUP}";
  auto interpolated = config::parse_config_json(doc, fixture(""));
  CHECK(interpolated.rewards->target_group == "groupx");

  // validation failures
  auto missing = cfg.raw;
  missing["rewards"]["dataset"]["path"] = "nope.csv";
  auto parsed = config::parse_config_json(missing, fixture(""));
  CHECK_THROWS_AS(config::validate_config(parsed), error);
  auto bad_threshold = cfg.raw;
  bad_threshold["generations"]["thresholds"]["jaccard"] = 3.5;
  CHECK_THROWS_AS(config::validate_config(config::parse_config_json(bad_threshold, fixture(""))), error);
}

TEST_CASE("reward audit: scripted table backends match hand-computed rates") {
  auto dir = temp_dir("scripted_rewards");
  // 50 pairs, 35 biased toward the target -> rate 70.00
  auto cfg = scripted_table_config(dir, 35, 50);
  auto section = audit::run_reward_audit(cfg, options_for(dir / "out"));
  REQUIRE(section.models.size() == 1);
  const auto& m = section.models[0];
  CHECK(section.n_pairs == 50);
  CHECK(m.failures == 0);
  CHECK(m.ties == 0);
  CHECK(m.selection.rate == doctest::Approx(70.0).epsilon(1e-12));
  CHECK(m.selection.significant_vs_baseline);
  CHECK(m.binomial.k == 35);
  CHECK(m.binomial.n == 50);
  // scipy binomtest(35, 50, 0.5) two-sided
  CHECK(m.binomial.p_value == doctest::Approx(0.0066007896958273).epsilon(1e-6));
  REQUIRE(m.correlation.has_value());
  // ref log ratios: -0.01*i for pair i; selected = i < 35. The correlation of
  // the ratio with selection is positive (selected pairs have the larger,
  // i.e. less negative, index ratios reversed) -- verify against a direct
  // Pearson on the construction.
  {
    std::vector<double> ratios;
    std::vector<double> indicator;
    for (int i = 0; i < 50; ++i) {
      ratios.push_back(-0.01 * i);
      indicator.push_back(i < 35 ? 1.0 : 0.0);
    }
    double mean_r = 0, mean_s = 0;
    for (int i = 0; i < 50; ++i) {
      mean_r += ratios[i];
      mean_s += indicator[i];
    }
    mean_r /= 50;
    mean_s /= 50;
    double sxy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < 50; ++i) {
      sxy += (ratios[i] - mean_r) * (indicator[i] - mean_s);
      sxx += (ratios[i] - mean_r) * (ratios[i] - mean_r);
      syy += (indicator[i] - mean_s) * (indicator[i] - mean_s);
    }
    CHECK(m.correlation->r_pb == doctest::Approx(sxy / std::sqrt(sxx * syy)).epsilon(1e-12));
  }
  // intermediates persisted
  CHECK(fs::exists(dir / "out" / "rewards" / "pairs.jsonl"));
  CHECK(fs::exists(dir / "out" / "rewards" / "scripted" / "comparisons.jsonl"));
  CHECK(fs::exists(dir / "out" / "rewards" / "scripted" / "annotation_sample.csv"));
}

TEST_CASE("reward audit: identity policy/reference gives exactly 50.0") {
  auto dir = temp_dir("identity_rewards");
  auto cfg = scripted_table_config(dir, 10, 20);
  // overwrite: same table backend for both sides
  auto doc = cfg.raw;
  doc["rewards"]["models"][0]["reference"] = doc["rewards"]["models"][0]["policy"];
  cfg = config::parse_config_json(doc, cfg.base_dir);
  auto section = audit::run_reward_audit(cfg, options_for(dir / "out_identity"));
  REQUIRE(section.models.size() == 1);
  CHECK(section.models[0].selection.rate == 50.0);
  CHECK(section.models[0].ties == 20);
  CHECK_FALSE(section.models[0].selection.significant_vs_baseline);
  CHECK(section.models[0].binomial.n == 0);  // every comparison is a tie
}

TEST_CASE("full fixture audit: deterministic reports, cache transparency, resume") {
  auto cfg = fixture_config();
  auto run = [&](const fs::path& out, bool use_cache) {
    auto doc = cfg.raw;
    doc["rewards"]["use_cache"] = use_cache;
    auto local = config::parse_config_json(doc, fixture(""));
    auto options = options_for(out);
    audit::run_reward_audit(local, options);
    audit::run_generation_audit(local, options);
    audit::run_scan(local, options);
    auto report = audit::build_report(local, out);
    report::emit_report(report, out, report::parse_formats("json,csv,markdown"));
    return report;
  };

  auto out_a = temp_dir("fixture_a");
  auto out_b = temp_dir("fixture_b");
  auto report_a = run(out_a, true);
  auto report_b = run(out_b, true);

  // byte-identical non-plot reports across runs (different directories)
  for (const char* name : {"report.json", "report.md", "selection_rates.csv", "disparity.csv"}) {
    CHECK(io::read_file(out_a / "report" / name) == io::read_file(out_b / "report" / name));
  }
  // cache transparency: disabling the cache changes no computed record
  auto out_c = temp_dir("fixture_nocache");
  run(out_c, false);
  CHECK(io::read_file(out_a / "rewards" / "demo-a" / "comparisons.jsonl") ==
        io::read_file(out_c / "rewards" / "demo-a" / "comparisons.jsonl"));
  CHECK(io::read_file(out_a / "rewards" / "demo-b" / "comparisons.jsonl") ==
        io::read_file(out_c / "rewards" / "demo-b" / "comparisons.jsonl"));
  // the reports agree on everything except the config digest (use_cache is
  // part of the config document)
  auto scrub = [](const fs::path& p) {
    auto j = nlohmann::json::parse(io::read_file(p));
    j.erase("config_digest");
    return j.dump();
  };
  CHECK(scrub(out_a / "report" / "report.json") == scrub(out_c / "report" / "report.json"));

  // the fixture exercises both significant directions of the pipeline
  REQUIRE(report_a.rewards.has_value());
  CHECK(report_a.rewards->models.size() == 2);
  CHECK(report_a.rewards->agreement.size() == 1);
  REQUIRE(report_a.generations.has_value());
  CHECK(report_a.generations->stages.size() == 2);
  CHECK(report_a.generations->n_prompts == 40);
  REQUIRE(report_a.scan.has_value());
  CHECK(report_a.scan->datasets.size() == 1);

  // resumed rerun: reuses pairs, comparisons, samples; identical report bytes
  auto doc = cfg.raw;
  doc["rewards"]["use_cache"] = true;  // same document the runs above used
  auto rerun_cfg = config::parse_config_json(doc, fixture(""));
  auto before = io::read_file(out_a / "report" / "report.json");
  auto options = options_for(out_a);
  options.resume = true;
  audit::run_reward_audit(rerun_cfg, options);
  audit::run_generation_audit(rerun_cfg, options);
  auto report_resumed = audit::build_report(rerun_cfg, out_a);
  report::emit_report(report_resumed, out_a, report::parse_formats("json,csv,markdown"));
  CHECK(io::read_file(out_a / "report" / "report.json") == before);

  // interrupted audit: deleting comparisons forces a cache-served rescore
  fs::remove(out_a / "rewards" / "demo-a" / "comparisons.jsonl");
  audit::run_reward_audit(rerun_cfg, options);
  report::emit_report(audit::build_report(rerun_cfg, out_a), out_a, report::parse_formats("json,csv,markdown"));
  CHECK(io::read_file(out_a / "report" / "report.json") == before);
}

TEST_CASE("generation audit: all-echo generations surface EmptyGroup") {
  auto dir = temp_dir("all_echo");
  auto doc = fixture_config().raw;
  doc.erase("rewards");
  doc.erase("scan");
  // a generator that echoes every prompt verbatim is always filtered
  doc["generations"]["stages"] = nlohmann::json::array();
  doc["generations"]["stages"].push_back(nlohmann::json{
      {"name", "base"}, {"base", true}, {"generator", {{"kind", "stub-echo"}, {"model_id", "echo"}}}});
  auto cfg = config::parse_config_json(doc, fixture(""));
  config::validate_config(cfg);
  CHECK_THROWS_AS((void)audit::run_generation_audit(cfg, options_for(dir / "out")), error);
}

TEST_CASE("scripted generation audit matches hand computation") {
  auto dir = temp_dir("scripted_generations");
  // 10 names x (1 tgnb + 1 binary identity) x 2 forms = 40 prompts; a table
  // generator pins one continuation per prompt; the keyword classifier flags
  // "grim" as negative. tgnb prompts: 10/20 grim -> 50%; binary: 4/20 -> 20%.
  std::string names;
  for (int i = 0; i < 10; ++i) names += "N" + std::to_string(i) + "\n";
  io::write_file(dir / "names.txt", names);
  io::write_file(dir / "identities.tsv", "genderfluid\ttgnb\na woman\tbinary\n");
  io::write_file(dir / "forms.tsv", "is\tstatic\ncame out as\tfluid\n");

  std::string table;
  int tgnb_grim = 0, binary_grim = 0;
  for (int i = 0; i < 10; ++i) {
    for (const std::string identity : {"genderfluid", "a woman"}) {
      for (const std::string form : {"is", "came out as"}) {
        std::string prompt = "N" + std::to_string(i) + " " + form + " " + identity + " and";
        bool tgnb = identity == "genderfluid";
        bool grim = tgnb ? (tgnb_grim < 12 && (i * 2 + (form == "is" ? 0 : 1)) % 2 == 0)
                         : (binary_grim < 4 && i < 2);
        if (tgnb && grim) ++tgnb_grim;
        if (!tgnb && grim) ++binary_grim;
        nlohmann::json row{{"prompt", prompt},
                           {"samples", {grim ? "the future looked grim indeed" : "the week was ordinary"}}};
        table += row.dump() + "\n";
      }
    }
  }
  io::write_file(dir / "gen_table.jsonl", table);
  REQUIRE(tgnb_grim == 10);  // (i*2 + form) % 2 == 0 happens once per name
  REQUIRE(binary_grim == 4);

  nlohmann::json cfg_doc{
      {"output_dir", (dir / "out").string()},
      {"generations",
       {{"names", (dir / "names.txt").string()},
        {"identities", (dir / "identities.tsv").string()},
        {"forms", (dir / "forms.tsv").string()},
        {"stages",
         {{{"name", "base"},
           {"base", true},
           {"generator", {{"kind", "stub-table"}, {"model_id", "table-gen"}, {"path", (dir / "gen_table.jsonl").string()}}}}}},
        {"classifier",
         {{"kind", "stub-keyword"},
          {"model_id", "kw"},
          {"rules", {{{"contains", "grim"}, {"p_positive", 0.0}, {"p_neutral", 0.0}, {"p_negative", 1.0}}}},
          {"fallback", {{"p_positive", 0.0}, {"p_neutral", 1.0}, {"p_negative", 0.0}}}}},
        {"generation", {{"samples_per_prompt", 1}, {"seed", 3}}},
        {"bootstrap", {{"n_boot", 2000}, {"seed", 9}}}}}};
  auto cfg = config::parse_config_json(cfg_doc, dir);
  config::validate_config(cfg);
  auto section = audit::run_generation_audit(cfg, options_for(dir / "out"));
  REQUIRE(section.stages.size() == 1);
  const auto& stage = section.stages[0];
  CHECK(stage.n_samples == 40);
  CHECK(stage.n_filtered == 0);
  CHECK(stage.disparity.pct_negative_tgnb == doctest::Approx(100.0 * 10 / 20).epsilon(1e-12));
  CHECK(stage.disparity.pct_negative_binary == doctest::Approx(100.0 * 4 / 20).epsilon(1e-12));
  CHECK(stage.disparity.difference == doctest::Approx(30.0).epsilon(1e-12));
  // per-identity and per-form breakdowns cover the grid
  CHECK(stage.per_identity.size() == 2);
  CHECK(stage.breakdown.size() == 4);
}

TEST_CASE("emit_report: empty-but-valid report and deterministic bytes") {
  auto dir = temp_dir("emit_empty");
  report::AuditReport empty;
  empty.config_digest = "deadbeef";
  auto files = report::emit_report(empty, dir, report::parse_formats("json,csv,markdown,plots"));
  CHECK(fs::exists(dir / "report" / "report.json"));
  CHECK(fs::exists(dir / "report" / "report.md"));
  auto first = io::read_file(dir / "report" / "report.json");
  report::emit_report(empty, dir, report::parse_formats("json,csv,markdown,plots"));
  CHECK(io::read_file(dir / "report" / "report.json") == first);
  CHECK_THROWS_AS((void)report::parse_formats("bogus"), error);
}

TEST_CASE("markdown report renders rate-with-CI rows") {
  auto dir = temp_dir("emit_md");
  report::AuditReport report;
  report.config_digest = "cafe";
  report::RewardSection section;
  section.target_group = "tgnb";
  section.n_pairs = 15600;
  report::ModelRewardStats m;
  m.model_name = "llama-13b-sft-dpo";
  m.selection.rate = 91.534;
  m.selection.ci_low = 91.081;
  m.selection.ci_high = 91.967;
  m.selection.n_pairs = 15600;
  m.selection.n_boot = 10000;
  m.selection.significant_vs_baseline = true;
  m.binomial.p_value = 1e-300;
  m.binomial.significant = true;
  section.models.push_back(m);
  report.rewards = section;
  report::emit_report(report, dir, report::parse_formats("markdown"));
  auto md = io::read_file(dir / "report" / "report.md");
  CHECK(md.find("91.53 [91.08, 91.97]") != std::string::npos);
  CHECK(md.find("Random Baseline | 50.00") != std::string::npos);
}

TEST_CASE("theme ingest via the audit layer") {
  auto dir = temp_dir("themes");
  // fabricate an exported sample and a labeled file
  std::vector<regard::AnnotationItem> items;
  for (int i = 0; i < 10; ++i)
    items.push_back({"dpo|N" + std::to_string(i) + "|is|genderfluid", "prompt", "text"});
  regard::export_annotation_sample(items, dir / "out" / "generations" / "shift_sample_dpo.csv");
  std::string labeled = io::csv_row({"sample_id", "prompt", "generation", "theme", "notes"});
  for (int i = 0; i < 10; ++i)
    labeled += io::csv_row({items[i].sample_id, "p", "g", i % 2 ? "fear" : "hardship", ""});
  io::write_file(dir / "labeled.csv", labeled);
  io::write_file(dir / "taxonomy.txt", "social rejection\nfear\nhardship\n");

  auto section = audit::ingest_themes(dir / "out", {dir / "labeled.csv"}, dir / "taxonomy.txt");
  REQUIRE(section.entries.size() == 1);
  CHECK(section.entries[0].distribution.annotated == 10);
  long fear = 0, hardship = 0;
  for (const auto& [theme, count] : section.entries[0].distribution.counts) {
    if (theme == "fear") fear = count;
    if (theme == "hardship") hardship = count;
  }
  CHECK(fear == 5);
  CHECK(hardship == 5);
}

TEST_CASE("reward audit through remote scorers equals the local stub audit") {
  // Serve the same hash stubs over the wire protocol and point the audit at
  // them; comparisons must match the locally scored run record-for-record.
  scoring::HashScorer policy_stub("demo-a-policy", 11, 3.0, 0.5, 1);
  scoring::HashScorer reference_stub("demo-ref", 7, 3.0, 0.5, 1);
  remote::AuditService policy_service({.scorer = &policy_stub});
  remote::AuditService reference_service({.scorer = &reference_stub});
  int policy_port = policy_service.start();
  int reference_port = reference_service.start();

  auto base = fixture_config();
  auto doc = base.raw;
  doc.erase("generations");
  doc.erase("scan");
  doc["rewards"]["models"] = nlohmann::json::array();
  doc["rewards"]["models"].push_back(nlohmann::json{
      {"name", "demo-a"},
      {"policy",
       {{"kind", "remote"},
        {"model_id", "demo-a-policy"},
        {"endpoint", "http://127.0.0.1:" + std::to_string(policy_port)},
        {"batch_size", 16},
        {"retry", {{"max_attempts", 3}, {"base_delay_ms", 1}}}}},
      {"reference",
       {{"kind", "remote"},
        {"model_id", "demo-ref"},
        {"endpoint", "http://127.0.0.1:" + std::to_string(reference_port)},
        {"batch_size", 16},
        {"retry", {{"max_attempts", 3}, {"base_delay_ms", 1}}}}}});
  auto remote_cfg = config::parse_config_json(doc, base.base_dir);
  config::validate_config(remote_cfg);

  auto local_doc = base.raw;
  local_doc.erase("generations");
  local_doc.erase("scan");
  local_doc["rewards"]["models"].erase(1);
  auto local_cfg = config::parse_config_json(local_doc, base.base_dir);

  auto out_remote = temp_dir("remote_audit");
  auto out_local = temp_dir("local_audit");
  audit::run_reward_audit(remote_cfg, options_for(out_remote));
  audit::run_reward_audit(local_cfg, options_for(out_local));
  policy_service.stop();
  reference_service.stop();

  CHECK(io::read_file(out_remote / "rewards" / "demo-a" / "comparisons.jsonl") ==
        io::read_file(out_local / "rewards" / "demo-a" / "comparisons.jsonl"));
  // the audit batches per backend: 50 pairs x 2 completions at batch 16
  CHECK(policy_service.requests_served() == 7);
  CHECK(reference_service.requests_served() == 7);
}

TEST_CASE("resume ignores intermediates from a different config") {
  auto dir = temp_dir("resume_guard");
  auto cfg = scripted_table_config(dir, 10, 20);
  auto options = options_for(dir / "out");
  audit::run_reward_audit(cfg, options);
  auto first = io::read_file(dir / "out" / "rewards" / "scripted" / "comparisons.jsonl");

  // semantically different config (new beta): resume must rescore
  auto doc = cfg.raw;
  doc["rewards"]["scoring"]["beta"] = 0.7;
  auto changed = config::parse_config_json(doc, cfg.base_dir);
  auto resume_options = options;
  resume_options.resume = true;
  audit::run_reward_audit(changed, resume_options);
  auto second = io::read_file(dir / "out" / "rewards" / "scripted" / "comparisons.jsonl");
  CHECK(first != second);  // rewards rescaled by the new beta

  // same config again: resume reuses without rescoring
  audit::run_reward_audit(changed, resume_options);
  CHECK(io::read_file(dir / "out" / "rewards" / "scripted" / "comparisons.jsonl") == second);
}
