#include "rewardaudit/config.hpp"

#include "rewardaudit/errors.hpp"
#include "rewardaudit/io.hpp"
#include "rewardaudit/remote.hpp"

namespace rewardaudit::config {

namespace {

json interpolate_strings(const json& node) {
  if (node.is_string()) return io::interpolate_env(node.get<std::string>());
  if (node.is_object()) {
    json out = json::object();
    for (auto& [key, value] : node.items()) out[key] = interpolate_strings(value);
    return out;
  }
  if (node.is_array()) {
    json out = json::array();
    for (const auto& value : node) out.push_back(interpolate_strings(value));
    return out;
  }
  return node;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_absolute() || base.empty()) return path;
  return base / path;
}

remote::RetryPolicy retry_from(const json& spec) {
  remote::RetryPolicy retry;
  if (spec.contains("retry")) {
    retry.max_attempts = spec["retry"].value("max_attempts", retry.max_attempts);
    retry.base_delay_ms = spec["retry"].value("base_delay_ms", retry.base_delay_ms);
  }
  return retry;
}

regard::RegardDistribution distribution_from(const json& j) {
  return regard::RegardDistribution::make(j.value("p_positive", 0.0), j.value("p_neutral", 0.0),
                                          j.value("p_negative", 0.0));
}

}  // namespace

std::string BackendSpec::kind() const {
  if (!spec.is_object() || !spec.contains("kind"))
    fail(errc::invalid_config, "backend spec needs a \"kind\": " + spec.dump());
  return spec["kind"].get<std::string>();
}

std::string BackendSpec::model_id() const {
  if (spec.contains("model_id")) return spec["model_id"].get<std::string>();
  return kind() + "-" + io::sha256_hex(spec.dump()).substr(0, 8);
}

AuditConfig parse_config_json_impl(json document, const std::filesystem::path& base_dir);

AuditConfig parse_config(const std::filesystem::path& path) {
  json document = json::parse(io::read_file(path), nullptr, false);
  if (document.is_discarded()) fail(errc::invalid_config, "config is not valid JSON: " + path.string());
  return parse_config_json(std::move(document), path.has_parent_path() ? path.parent_path() : ".");
}

AuditConfig parse_config_json(json document, const std::filesystem::path& base_dir) {
  try {
    return parse_config_json_impl(std::move(document), base_dir);
  } catch (const json::exception& e) {
    fail(errc::invalid_config, std::string("config: ") + e.what());
  }
}

AuditConfig parse_config_json_impl(json document, const std::filesystem::path& base_dir) {
  AuditConfig config;
  config.raw = interpolate_strings(document);
  config.base_dir = base_dir;
  const json& j = config.raw;
  if (!j.is_object()) fail(errc::invalid_config, "config root must be a JSON object");

  if (j.contains("output_dir")) config.output_dir = j["output_dir"].get<std::string>();

  // Digest over the canonical document minus output_dir; where results land
  // does not change what is computed.
  json semantic = j;
  semantic.erase("output_dir");
  config.config_digest = io::sha256_hex(semantic.dump());

  if (j.contains("rewards")) {
    const json& r = j["rewards"];
    RewardAuditConfig rc;
    const json& dataset = r.at("dataset");
    rc.dataset_path = resolve(base_dir, dataset.at("path").get<std::string>());
    std::string delim = dataset.value("delimiter", ",");
    if (delim == "\\t" || delim == "tab") delim = "\t";
    if (delim.size() != 1) fail(errc::invalid_config, "dataset delimiter must be a single character");
    rc.table.delimiter = delim[0];
    rc.table.sentence_column = dataset.at("sentence_column").get<std::string>();
    rc.table.subject_column = dataset.at("subject_column").get<std::string>();
    rc.table.group_column = dataset.value("group_column", "");
    rc.table.id_column = dataset.value("id_column", "");
    rc.lexicons_path = resolve(base_dir, r.at("lexicons").get<std::string>());
    rc.group_a = r.at("group_a").get<std::string>();
    rc.group_b = r.at("group_b").get<std::string>();
    rc.target_group = r.value("target_group", rc.group_a);
    rc.prompt_format = r.value("prompt_format", rc.prompt_format);
    rc.prompt_order = corpus::prompt_order_from_string(r.value("prompt_order", "alphabetical"));
    for (const auto& m : r.at("models")) {
      ModelSpec spec;
      spec.name = m.at("name").get<std::string>();
      spec.policy = BackendSpec{m.at("policy")};
      spec.reference = BackendSpec{m.at("reference")};
      rc.models.push_back(std::move(spec));
    }
    if (rc.models.empty()) fail(errc::invalid_config, "rewards.models must be non-empty");
    if (r.contains("scoring")) {
      const json& s = r["scoring"];
      rc.scoring_params.beta = s.value("beta", rc.scoring_params.beta);
      rc.scoring_params.prompt_template = s.value("prompt_template", rc.scoring_params.prompt_template);
      rc.context_limit = s.value("context_limit", rc.context_limit);
      rc.batch_size = s.value("batch_size", rc.batch_size);
    }
    rc.use_cache = r.value("use_cache", true);
    if (r.contains("bootstrap")) {
      rc.bootstrap.n_boot = r["bootstrap"].value("n_boot", rc.bootstrap.n_boot);
      rc.bootstrap.level = r["bootstrap"].value("level", rc.bootstrap.level);
      rc.bootstrap.seed = r["bootstrap"].value("seed", rc.bootstrap.seed);
    }
    rc.alpha = r.value("alpha", rc.alpha);
    if (r.contains("annotation")) {
      rc.annotation_sample_n = r["annotation"].value("sample_n", rc.annotation_sample_n);
      rc.annotation_seed = r["annotation"].value("seed", rc.annotation_seed);
    }
    config.rewards = std::move(rc);
  }

  if (j.contains("generations")) {
    const json& g = j["generations"];
    GenerationAuditConfig gc;
    gc.names_path = resolve(base_dir, g.at("names").get<std::string>());
    gc.identities_path = resolve(base_dir, g.at("identities").get<std::string>());
    gc.forms_path = resolve(base_dir, g.at("forms").get<std::string>());
    for (const auto& s : g.at("stages")) {
      GenerationStageSpec stage;
      stage.name = s.at("name").get<std::string>();
      stage.generator = BackendSpec{s.at("generator")};
      stage.is_base = s.value("base", stage.name == "base");
      gc.stages.push_back(std::move(stage));
    }
    if (gc.stages.empty()) fail(errc::invalid_config, "generations.stages must be non-empty");
    gc.classifier = BackendSpec{g.at("classifier")};
    if (g.contains("toxicity")) gc.toxicity = BackendSpec{g["toxicity"]};
    if (g.contains("generation")) {
      const json& gen = g["generation"];
      gc.generation.temperature = gen.value("temperature", gc.generation.temperature);
      gc.generation.top_p = gen.value("top_p", gc.generation.top_p);
      gc.generation.repetition_penalty = gen.value("repetition_penalty", gc.generation.repetition_penalty);
      gc.generation.max_new_tokens = gen.value("max_new_tokens", gc.generation.max_new_tokens);
      gc.generation.samples_per_prompt = gen.value("samples_per_prompt", gc.generation.samples_per_prompt);
      gc.generation.seed = gen.value("seed", gc.generation.seed);
    }
    if (g.contains("thresholds")) {
      const json& t = g["thresholds"];
      gc.jaccard_threshold = t.value("jaccard", gc.jaccard_threshold);
      gc.shift_threshold = t.value("shift", gc.shift_threshold);
      gc.toxicity_threshold = t.value("toxicity", gc.toxicity_threshold);
    }
    if (g.contains("shift")) {
      gc.shift_sample_n = g["shift"].value("sample_n", gc.shift_sample_n);
      gc.shift_sample_seed = g["shift"].value("seed", gc.shift_sample_seed);
      gc.shift_metric = regard::shift_metric_from_string(g["shift"].value("metric", "probability"));
    }
    if (g.contains("bootstrap")) {
      gc.bootstrap.n_boot = g["bootstrap"].value("n_boot", gc.bootstrap.n_boot);
      gc.bootstrap.level = g["bootstrap"].value("level", gc.bootstrap.level);
      gc.bootstrap.seed = g["bootstrap"].value("seed", gc.bootstrap.seed);
    }
    config.generations = std::move(gc);
  }

  if (j.contains("scan")) {
    const json& s = j["scan"];
    ScanConfig sc;
    sc.terms_path = resolve(base_dir, s.at("terms").get<std::string>());
    for (const auto& d : s.at("datasets")) {
      sc.datasets.push_back(
          ScanConfig::Dataset{d.at("name").get<std::string>(), resolve(base_dir, d.at("path").get<std::string>())});
    }
    sc.excerpt_window = s.value("excerpt_window", sc.excerpt_window);
    config.scan = std::move(sc);
  }

  if (!config.rewards && !config.generations && !config.scan)
    fail(errc::invalid_config, "config declares no rewards/generations/scan section");
  return config;
}

namespace {

void require_exists(const std::filesystem::path& path, const std::string& what) {
  if (!std::filesystem::exists(path)) fail(errc::invalid_config, what + " does not exist: " + path.string());
}

void check_range(double value, double lo, double hi, const std::string& what) {
  if (!(value >= lo && value <= hi))
    fail(errc::invalid_config, what + " = " + std::to_string(value) + " outside [" + std::to_string(lo) + ", " +
                                   std::to_string(hi) + "]");
}

void check_bootstrap(const rewards::BootstrapParams& params, const std::string& where) {
  if (params.n_boot < 1) fail(errc::invalid_config, where + ".n_boot must be >= 1");
  if (!(params.level > 0.0 && params.level < 1.0)) fail(errc::invalid_config, where + ".level must be in (0,1)");
}

}  // namespace

void validate_config(const AuditConfig& config) {
  if (const auto& rc = config.rewards) {
    require_exists(rc->dataset_path, "rewards dataset");
    require_exists(rc->lexicons_path, "lexicon file");
    auto lexicons = corpus::load_lexicons(rc->lexicons_path);
    auto has_label = [&](const std::string& label) {
      for (const auto& lex : lexicons)
        if (lex.label == label) return true;
      return false;
    };
    for (const auto& label : {rc->group_a, rc->group_b, rc->target_group}) {
      if (!has_label(label)) fail(errc::invalid_config, "group label '" + label + "' not found in lexicon file");
    }
    if (rc->group_a == rc->group_b) fail(errc::invalid_config, "group_a and group_b must differ");
    if (rc->target_group != rc->group_a && rc->target_group != rc->group_b)
      fail(errc::invalid_config, "target_group must be group_a or group_b");
    if (!(rc->scoring_params.beta > 0)) fail(errc::invalid_config, "scoring.beta must be positive");
    check_bootstrap(rc->bootstrap, "rewards.bootstrap");
    check_range(rc->alpha, 0.0, 1.0, "rewards.alpha");
    for (const auto& model : rc->models) {
      for (const auto* side : {&model.policy, &model.reference}) {
        if (side->spec.value("kind", "") == "table")
          require_exists(resolve(config.base_dir, side->spec.at("path").get<std::string>()), "score table");
      }
    }
  }
  if (const auto& gc = config.generations) {
    require_exists(gc->names_path, "names file");
    require_exists(gc->identities_path, "identities file");
    require_exists(gc->forms_path, "forms file");
    check_range(gc->jaccard_threshold, 0.0, 1.0, "thresholds.jaccard");
    check_range(gc->shift_threshold, 0.0, 1.0, "thresholds.shift");
    check_range(gc->toxicity_threshold, 0.0, 1.0, "thresholds.toxicity");
    scoring::validate(gc->generation);
    check_bootstrap(gc->bootstrap, "generations.bootstrap");
    int base_count = 0;
    for (const auto& stage : gc->stages) base_count += stage.is_base ? 1 : 0;
    if (gc->stages.size() > 1 && base_count != 1)
      fail(errc::invalid_config, "exactly one generation stage must be marked base when several are configured");
  }
  if (const auto& sc = config.scan) {
    require_exists(sc->terms_path, "scan term list");
    for (const auto& dataset : sc->datasets) require_exists(dataset.path, "scan dataset '" + dataset.name + "'");
  }
}

std::unique_ptr<scoring::Scorer> make_scorer(const BackendSpec& spec, scoring::Role role, int context_limit,
                                             const std::filesystem::path& base_dir) {
  const std::string kind = spec.kind();
  const json& s = spec.spec;
  context_limit = s.value("context_limit", context_limit);
  if (kind == "stub-uniform") {
    return std::make_unique<scoring::UniformScorer>(spec.model_id(), s.at("vocab_size").get<std::size_t>(),
                                                    context_limit, role);
  }
  if (kind == "stub-hash") {
    return std::make_unique<scoring::HashScorer>(spec.model_id(), s.at("seed").get<std::uint64_t>(),
                                                 s.value("scale", 3.0), s.value("offset", 0.5),
                                                 s.value("context_window", 0), context_limit, role);
  }
  if (kind == "table") {
    return scoring::TableScorer::from_jsonl(spec.model_id(),
                                            resolve(base_dir, s.at("path").get<std::string>()).string(), role);
  }
  if (kind == "remote") {
    return std::make_unique<remote::RemoteScorer>(s.at("endpoint").get<std::string>(), spec.model_id(), context_limit,
                                                  s.value("batch_size", 64), retry_from(s), role);
  }
  fail(errc::invalid_config, "unknown scorer kind '" + kind + "'");
}

std::unique_ptr<scoring::Generator> make_generator(const BackendSpec& spec, const std::filesystem::path& base_dir) {
  const std::string kind = spec.kind();
  const json& s = spec.spec;
  if (kind == "stub-fixed") return scoring::ScriptedGenerator::fixed(spec.model_id(), s.at("text").get<std::string>());
  if (kind == "stub-echo") return scoring::ScriptedGenerator::echo(spec.model_id());
  if (kind == "stub-table")
    return scoring::ScriptedGenerator::table_from_jsonl(spec.model_id(),
                                                        resolve(base_dir, s.at("path").get<std::string>()).string());
  if (kind == "stub-synth") {
    std::vector<std::string> bank;
    if (s.contains("word_bank")) bank = s["word_bank"].get<std::vector<std::string>>();
    return scoring::ScriptedGenerator::synth(spec.model_id(), s.value("style_seed", 0ull), std::move(bank));
  }
  if (kind == "remote")
    return std::make_unique<remote::RemoteGenerator>(s.at("endpoint").get<std::string>(), spec.model_id(),
                                                     retry_from(s));
  fail(errc::invalid_config, "unknown generator kind '" + kind + "'");
}

std::unique_ptr<regard::RegardClassifier> make_regard_classifier(const BackendSpec& spec,
                                                                 const std::filesystem::path& base_dir) {
  const std::string kind = spec.kind();
  const json& s = spec.spec;
  if (kind == "stub-keyword") {
    std::vector<regard::KeywordRegardClassifier::Rule> rules;
    for (const auto& rule : s.value("rules", json::array())) {
      rules.push_back({rule.at("contains").get<std::string>(), distribution_from(rule)});
    }
    regard::RegardDistribution fallback =
        s.contains("fallback") ? distribution_from(s["fallback"]) : regard::RegardDistribution::make(0.0, 1.0, 0.0);
    return std::make_unique<regard::KeywordRegardClassifier>(spec.model_id(), std::move(rules), fallback);
  }
  if (kind == "stub-table") {
    std::map<std::string, regard::RegardDistribution> table;
    io::for_each_jsonl(
        resolve(base_dir, s.at("path").get<std::string>()),
        [&](std::size_t, const json& j) { table.emplace(j.at("text").get<std::string>(), distribution_from(j)); },
        [&](std::size_t lineno, const std::string&, const std::string& what) {
          fail(errc::invalid_config, "bad classifier table line " + std::to_string(lineno) + ": " + what);
        });
    return std::make_unique<regard::TableRegardClassifier>(spec.model_id(), std::move(table));
  }
  if (kind == "remote")
    return std::make_unique<remote::RemoteRegardClassifier>(s.at("endpoint").get<std::string>(), spec.model_id(),
                                                            s.value("fold_other", true), retry_from(s));
  fail(errc::invalid_config, "unknown classifier kind '" + kind + "'");
}

std::unique_ptr<regard::ToxicityScorer> make_toxicity_scorer(const BackendSpec& spec,
                                                             const std::filesystem::path& base_dir) {
  (void)base_dir;  // no file-backed toxicity stubs yet
  const std::string kind = spec.kind();
  const json& s = spec.spec;
  if (kind == "stub-keyword") {
    std::vector<regard::KeywordToxicityScorer::Rule> rules;
    for (const auto& rule : s.value("rules", json::array())) {
      rules.push_back({rule.at("contains").get<std::string>(), rule.at("score").get<double>()});
    }
    return std::make_unique<regard::KeywordToxicityScorer>(spec.model_id(), std::move(rules),
                                                           s.value("fallback", 0.0));
  }
  if (kind == "remote")
    return std::make_unique<remote::RemoteToxicityScorer>(s.at("endpoint").get<std::string>(), spec.model_id(),
                                                          retry_from(s));
  fail(errc::invalid_config, "unknown toxicity scorer kind '" + kind + "'");
}

}  // namespace rewardaudit::config
