#include "rewardaudit/audit.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <set>

#include "rewardaudit/errors.hpp"
#include "rewardaudit/io.hpp"
#include "rewardaudit/stats.hpp"

namespace rewardaudit::audit {

namespace {

using nlohmann::json;

void log_line(const RunOptions& options, const std::string& line) {
  if (options.log) options.log(line);
}

std::string now_iso8601() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// Wall-clock metadata lives only here, never in report files, so reports stay
// byte-reproducible.
void update_manifest(const std::filesystem::path& out_dir, const std::string& key, json fragment,
                     const std::string& config_digest) {
  std::filesystem::path path = out_dir / "manifest.json";
  json manifest = json::object();
  if (std::filesystem::exists(path)) {
    manifest = json::parse(io::read_file(path), nullptr, false);
    if (manifest.is_discarded()) manifest = json::object();
  }
  // each section records the digest of the config that produced it, so
  // --resume can judge staleness per section
  fragment["config_digest"] = config_digest;
  manifest["config_digest"] = config_digest;
  manifest["updated_at"] = now_iso8601();
  manifest[key] = std::move(fragment);
  io::write_file(path, manifest.dump(2) + "\n");
}

// Persisted stage outputs are only reusable when they were produced by the
// same semantic config; otherwise --resume silently mixes audits.
bool resume_valid(const std::filesystem::path& out_dir, const std::string& section,
                  const std::string& config_digest) {
  std::filesystem::path path = out_dir / "manifest.json";
  if (!std::filesystem::exists(path)) return false;
  json manifest = json::parse(io::read_file(path), nullptr, false);
  if (!manifest.is_object() || !manifest.contains(section) || !manifest[section].is_object()) return false;
  return manifest[section].value("config_digest", "") == config_digest;
}

bool stage_wanted(const RunOptions& options, std::initializer_list<const char*> stages) {
  if (options.stage == "all") return true;
  for (const char* s : stages) {
    if (options.stage == s) return true;
  }
  return false;
}

// Stage outputs land under a temp name and only take their final name once
// complete, so an interrupted run never leaves a partial file where --resume
// would trust it.
class StageWriter {
 public:
  explicit StageWriter(std::filesystem::path final_path)
      : final_(std::move(final_path)), tmp_(final_.string() + ".tmp"), writer_(tmp_) {}
  void write(const json& record) { writer_.write(record); }
  void commit() {
    writer_.flush();
    std::filesystem::rename(tmp_, final_);
  }

 private:
  std::filesystem::path final_;
  std::filesystem::path tmp_;
  io::JsonlWriter writer_;
};

// Seeded uniform sample without replacement; returns selected indices.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t take, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  auto rng = stats::make_rng(seed);
  take = std::min(take, n);
  std::vector<std::size_t> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
    std::swap(order[i], order[j]);
    out.push_back(order[i]);
  }
  return out;
}

}  // namespace

json pair_to_json(const corpus::MockPreferencePair& pair) {
  return json{{"pair_id", pair.pair_id},
              {"prompt", pair.prompt},
              {"chosen", pair.chosen},
              {"rejected", pair.rejected},
              {"chosen_group", pair.chosen_group},
              {"rejected_group", pair.rejected_group},
              {"chosen_subject", pair.chosen_subject},
              {"rejected_subject", pair.rejected_subject},
              {"template_id", pair.template_id}};
}

corpus::MockPreferencePair pair_from_json(const json& j) {
  corpus::MockPreferencePair pair;
  pair.pair_id = j.at("pair_id").get<std::string>();
  pair.prompt = j.at("prompt").get<std::string>();
  pair.chosen = j.at("chosen").get<std::string>();
  pair.rejected = j.at("rejected").get<std::string>();
  pair.chosen_group = j.at("chosen_group").get<std::string>();
  pair.rejected_group = j.at("rejected_group").get<std::string>();
  pair.chosen_subject = j.value("chosen_subject", "");
  pair.rejected_subject = j.value("rejected_subject", "");
  pair.template_id = j.at("template_id").get<std::string>();
  return pair;
}

std::vector<corpus::MockPreferencePair> load_pairs(const std::filesystem::path& path) {
  std::vector<corpus::MockPreferencePair> pairs;
  io::for_each_jsonl(
      path, [&](std::size_t, const json& j) { pairs.push_back(pair_from_json(j)); },
      [&](std::size_t lineno, const std::string&, const std::string& what) {
        fail(errc::unreadable_record, "bad pair record at line " + std::to_string(lineno) + ": " + what);
      });
  return pairs;
}

void persist_config(const config::AuditConfig& config, const std::filesystem::path& out_dir) {
  json wrapper{{"base_dir", std::filesystem::absolute(config.base_dir).string()}, {"config", config.raw}};
  io::write_file(out_dir / "audit_config.json", wrapper.dump(2) + "\n");
}

config::AuditConfig load_persisted_config(const std::filesystem::path& out_dir) {
  json wrapper = json::parse(io::read_file(out_dir / "audit_config.json"));
  return config::parse_config_json(wrapper.at("config"), wrapper.at("base_dir").get<std::string>());
}

// --- reward audit -----------------------------------------------------------

namespace {

std::vector<corpus::MockPreferencePair> ensure_pairs(const config::AuditConfig& config, const RunOptions& options) {
  const auto& rc = *config.rewards;
  std::filesystem::path pairs_path = options.output_dir / "rewards" / "pairs.jsonl";
  if (options.resume && std::filesystem::exists(pairs_path) &&
      resume_valid(options.output_dir, "pairs", config.config_digest)) {
    auto pairs = load_pairs(pairs_path);
    log_line(options, "[pairs] reusing " + std::to_string(pairs.size()) + " pairs from " + pairs_path.string());
    return pairs;
  }

  auto lexicons = corpus::load_lexicons(rc.lexicons_path);
  const corpus::GroupLexicon* group_a = nullptr;
  const corpus::GroupLexicon* group_b = nullptr;
  for (const auto& lex : lexicons) {
    if (lex.label == rc.group_a) group_a = &lex;
    if (lex.label == rc.group_b) group_b = &lex;
  }
  if (!group_a || !group_b) fail(errc::invalid_config, "pairing labels not found in lexicon file");

  corpus::FilterResult filtered = corpus::filter_paired_dataset(rc.dataset_path, rc.table, lexicons);
  auto pairs = corpus::build_mock_preferences(filtered.instances, *group_a, *group_b, rc.prompt_format,
                                              rc.prompt_order);

  StageWriter pair_writer(pairs_path);
  for (const auto& pair : pairs) pair_writer.write(pair_to_json(pair));
  pair_writer.commit();
  StageWriter reject_writer(options.output_dir / "rewards" / "rejects.jsonl");
  for (const auto& reject : filtered.rejects)
    reject_writer.write(json{{"source_id", reject.source_id}, {"reason", reject.reason}});
  reject_writer.commit();

  update_manifest(options.output_dir, "pairs",
                  json{{"rows_total", filtered.rows_total},
                       {"instances", filtered.instances.size()},
                       {"dropped_out_of_lexicon", filtered.dropped_out_of_lexicon},
                       {"rejects", filtered.rejects.size()},
                       {"pairs", pairs.size()},
                       {"inputs",
                        {{rc.dataset_path.generic_string(), io::file_sha256_hex(rc.dataset_path)},
                         {rc.lexicons_path.generic_string(), io::file_sha256_hex(rc.lexicons_path)}}}},
                  config.config_digest);
  log_line(options, "[pairs] " + std::to_string(filtered.instances.size()) + " instances -> " +
                        std::to_string(pairs.size()) + " pairs (" + std::to_string(filtered.rejects.size()) +
                        " rejects, " + std::to_string(filtered.dropped_out_of_lexicon) + " out-of-lexicon rows)");
  return pairs;
}

struct ModelScoreOutcome {
  long scored = 0;
  long failures = 0;
};

// Scores the four records of each pair through the cache, batching uncached
// work; per-pair failures are recorded, never fatal.
ModelScoreOutcome score_model(const config::AuditConfig& config, const config::ModelSpec& model,
                              std::span<const corpus::MockPreferencePair> pairs, scoring::ScoreCache* cache,
                              const RunOptions& options) {
  const auto& rc = *config.rewards;
  auto policy = config::make_scorer(model.policy, scoring::Role::policy, rc.context_limit, config.base_dir);
  auto reference = config::make_scorer(model.reference, scoring::Role::reference, rc.context_limit, config.base_dir);

  struct Task {
    scoring::Scorer* scorer;
    const corpus::MockPreferencePair* pair;
    const std::string* completion;
    scoring::LogProbRecord record;
    bool done = false;
    std::string error;
  };
  std::vector<Task> tasks;
  tasks.reserve(pairs.size() * 4);
  for (const auto& pair : pairs) {
    for (scoring::Scorer* scorer : {policy.get(), reference.get()}) {
      for (const std::string* completion : {&pair.chosen, &pair.rejected}) {
        tasks.push_back(Task{scorer, &pair, completion, {}, false, {}});
      }
    }
  }

  // Cache probe, then batched scoring of the misses, partitioned per backend
  // so remote scorers see full batches.
  std::vector<std::size_t> policy_misses, reference_misses;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    auto& task = tasks[i];
    if (cache) {
      auto key = scoring::CacheKey::for_call(task.scorer->handle().model_id,
                                             rc.scoring_params.wrap_prompt(task.pair->prompt), *task.completion,
                                             rc.scoring_params.digest());
      if (auto hit = cache->get(key)) {
        task.record = *hit;
        task.done = true;
        continue;
      }
    }
    (task.scorer == policy.get() ? policy_misses : reference_misses).push_back(i);
  }

  const std::size_t batch = static_cast<std::size_t>(std::max(1, rc.batch_size));
  const std::string params_digest = rc.scoring_params.digest();
  for (const auto* misses : {&policy_misses, &reference_misses}) {
    for (std::size_t begin = 0; begin < misses->size(); begin += batch) {
      std::size_t end = std::min(misses->size(), begin + batch);
      bool batched = false;
      if (end - begin > 1) {
        std::vector<std::pair<std::string, std::string>> items;
        items.reserve(end - begin);
        for (std::size_t k = begin; k < end; ++k) {
          items.emplace_back(rc.scoring_params.wrap_prompt(tasks[(*misses)[k]].pair->prompt),
                             *tasks[(*misses)[k]].completion);
        }
        try {
          auto scored = tasks[(*misses)[begin]].scorer->score_batch(items);
          for (std::size_t k = begin; k < end; ++k) {
            auto& task = tasks[(*misses)[k]];
            scoring::LogProbRecord record;
            record.model_id = task.scorer->handle().model_id;
            record.prompt = items[k - begin].first;
            record.completion = items[k - begin].second;
            record.logprob_sum = scored[k - begin].logprob_sum;
            record.completion_token_count = scored[k - begin].completion_token_count;
            record.params_digest = params_digest;
            task.record = record;
            task.done = true;
            if (cache) {
              cache->put(scoring::CacheKey::for_call(record.model_id, record.prompt, record.completion,
                                                     record.params_digest),
                         record);
            }
          }
          batched = true;
        } catch (const std::exception&) {
          batched = false;  // fall through to per-item scoring for error attribution
        }
      }
      if (!batched) {
        for (std::size_t k = begin; k < end; ++k) {
          auto& task = tasks[(*misses)[k]];
          try {
            task.record = scoring::score_completion_cached(*task.scorer, task.pair->prompt, *task.completion,
                                                           rc.scoring_params, cache);
            task.done = true;
          } catch (const std::exception& e) {
            task.error = e.what();
          }
        }
      }
    }
  }

  // Assemble comparisons pair by pair.
  StageWriter writer(options.output_dir / "rewards" / model.name / "comparisons.jsonl");
  ModelScoreOutcome outcome;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const Task* t = &tasks[p * 4];
    bool ok = t[0].done && t[1].done && t[2].done && t[3].done;
    if (!ok) {
      outcome.failures++;
      std::string reason;
      for (int i = 0; i < 4; ++i) {
        if (!t[i].done) reason = t[i].error;
      }
      log_line(options, "[score:" + model.name + "] pair " + pairs[p].pair_id + " skipped: " + reason);
      continue;
    }
    rewards::PairScores scores{t[0].record, t[1].record, t[2].record, t[3].record};
    rewards::RewardComparison comparison = rewards::compare_pair(pairs[p], scores, rc.scoring_params.beta);
    writer.write(rewards::to_json(comparison));
    outcome.scored++;
  }
  writer.commit();
  return outcome;
}

std::vector<rewards::RewardComparison> load_comparisons(const std::filesystem::path& path) {
  std::vector<rewards::RewardComparison> comparisons;
  io::for_each_jsonl(
      path, [&](std::size_t, const json& j) { comparisons.push_back(rewards::comparison_from_json(j)); },
      [&](std::size_t lineno, const std::string&, const std::string& what) {
        fail(errc::unreadable_record, "bad comparison at line " + std::to_string(lineno) + ": " + what);
      });
  return comparisons;
}

}  // namespace

bool reward_intermediates_present(const config::AuditConfig& config, const std::filesystem::path& out_dir) {
  if (!config.rewards) return false;
  if (!std::filesystem::exists(out_dir / "rewards" / "pairs.jsonl")) return false;
  for (const auto& model : config.rewards->models) {
    if (!std::filesystem::exists(out_dir / "rewards" / model.name / "comparisons.jsonl")) return false;
  }
  return true;
}

report::RewardSection compute_reward_section(const config::AuditConfig& config,
                                             const std::filesystem::path& out_dir) {
  const auto& rc = *config.rewards;
  auto pairs = load_pairs(out_dir / "rewards" / "pairs.jsonl");
  std::map<std::string, const corpus::MockPreferencePair*> pair_index;
  for (const auto& pair : pairs) pair_index[pair.pair_id] = &pair;

  report::RewardSection section;
  section.target_group = rc.target_group;
  section.beta = rc.scoring_params.beta;
  section.alpha = rc.alpha;
  section.n_pairs = static_cast<long>(pairs.size());

  struct PerModel {
    std::string name;
    std::map<std::string, const rewards::RewardComparison*> by_pair;
  };
  std::vector<PerModel> aligned;
  std::vector<std::vector<rewards::RewardComparison>> all_comparisons;

  for (const auto& model : rc.models) {
    auto comparisons = load_comparisons(out_dir / "rewards" / model.name / "comparisons.jsonl");
    report::ModelRewardStats stats_row;
    stats_row.model_name = model.name;
    stats_row.policy_id = model.policy.model_id();
    stats_row.reference_id = model.reference.model_id();
    stats_row.failures = static_cast<long>(pairs.size()) - static_cast<long>(comparisons.size());
    for (const auto& c : comparisons) {
      if (c.selection == rewards::Selection::tie) stats_row.ties++;
    }
    stats_row.selection = rewards::selection_rate(comparisons, rc.target_group, rc.bootstrap);
    try {
      stats_row.binomial = rewards::baseline_significance(comparisons, rc.target_group, rc.alpha);
    } catch (const error& e) {
      if (e.code() != errc::empty_input) throw;  // all ties: no non-tie evidence against the baseline
      stats_row.binomial = rewards::BinomialTestResult{1.0, 0, 0, false};
    }
    std::vector<double> ratios;
    std::vector<int> selected;
    for (const auto& c : comparisons) {
      if (c.selection == rewards::Selection::tie) continue;
      ratios.push_back(c.ref_log_ratio_toward(rc.target_group));
      selected.push_back(c.selected_group() == rc.target_group ? 1 : 0);
    }
    try {
      stats_row.correlation = rewards::point_biserial(ratios, selected);
    } catch (const error& e) {
      if (e.code() != errc::degenerate_variance && e.code() != errc::empty_input) throw;
      stats_row.correlation.reset();
    }
    section.models.push_back(stats_row);

    // Annotation export: stigma texts the policy directed at the target group.
    std::vector<regard::AnnotationItem> candidates;
    for (const auto& c : comparisons) {
      if (c.selected_group() != rc.target_group) continue;
      auto it = pair_index.find(c.pair_id);
      if (it == pair_index.end()) continue;
      const auto& pair = *it->second;
      const std::string& text = pair.chosen_group == rc.target_group ? pair.chosen : pair.rejected;
      candidates.push_back(regard::AnnotationItem{model.name + "|" + c.pair_id, pair.prompt, text});
    }
    if (!candidates.empty()) {
      std::vector<regard::AnnotationItem> sampled;
      for (std::size_t i :
           sample_indices(candidates.size(), static_cast<std::size_t>(rc.annotation_sample_n), rc.annotation_seed)) {
        sampled.push_back(candidates[i]);
      }
      std::sort(sampled.begin(), sampled.end(),
                [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; });
      regard::export_annotation_sample(sampled, out_dir / "rewards" / model.name / "annotation_sample.csv");
    }

    PerModel pm;
    pm.name = model.name;
    all_comparisons.push_back(std::move(comparisons));
    aligned.push_back(std::move(pm));
  }
  for (std::size_t m = 0; m < aligned.size(); ++m) {
    for (const auto& c : all_comparisons[m]) aligned[m].by_pair[c.pair_id] = &c;
  }

  // Pairwise agreement over pairs that are tie-free in both models.
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    for (std::size_t k = i + 1; k < aligned.size(); ++k) {
      std::vector<int> a, b;
      for (const auto& [pair_id, ca] : aligned[i].by_pair) {
        auto it = aligned[k].by_pair.find(pair_id);
        if (it == aligned[k].by_pair.end()) continue;
        const auto* cb = it->second;
        if (ca->selection == rewards::Selection::tie || cb->selection == rewards::Selection::tie) continue;
        a.push_back(ca->selected_group() == rc.target_group ? 1 : 0);
        b.push_back(cb->selected_group() == rc.target_group ? 1 : 0);
      }
      if (a.empty()) continue;
      section.agreement.push_back(rewards::agreement(aligned[i].name, a, aligned[k].name, b));
    }
  }
  return section;
}

report::RewardSection run_reward_audit(const config::AuditConfig& config, const RunOptions& options) {
  if (!config.rewards) fail(errc::invalid_config, "config has no rewards section");
  std::filesystem::create_directories(options.output_dir);
  persist_config(config, options.output_dir);
  const auto& rc = *config.rewards;

  std::vector<corpus::MockPreferencePair> pairs;
  if (stage_wanted(options, {"pairs", "score"})) {
    pairs = ensure_pairs(config, options);
  } else {
    pairs = load_pairs(options.output_dir / "rewards" / "pairs.jsonl");
  }

  if (stage_wanted(options, {"score"})) {
    std::unique_ptr<scoring::ScoreCache> persistent;
    scoring::ScoreCache* cache = nullptr;
    if (rc.use_cache) {
      persistent = std::make_unique<scoring::ScoreCache>(options.output_dir / "cache" / "scores.jsonl");
      cache = persistent.get();
    }
    json model_stats = json::object();
    for (const auto& model : rc.models) {
      std::filesystem::path comparisons_path = options.output_dir / "rewards" / model.name / "comparisons.jsonl";
      if (options.resume && std::filesystem::exists(comparisons_path) &&
          resume_valid(options.output_dir, "scoring", config.config_digest)) {
        log_line(options, "[score:" + model.name + "] reusing " + comparisons_path.string());
        continue;
      }
      ModelScoreOutcome outcome = score_model(config, model, pairs, cache, options);
      model_stats[model.name] = json{{"scored", outcome.scored}, {"failures", outcome.failures}};
      log_line(options, "[score:" + model.name + "] " + std::to_string(outcome.scored) + " pairs scored, " +
                            std::to_string(outcome.failures) + " failures");
    }
    if (cache) {
      model_stats["cache"] = json{{"entries", cache->size()},
                                  {"hits", cache->hits()},
                                  {"misses", cache->misses()},
                                  {"corrupt_entries_skipped", cache->corrupt_entries_skipped()}};
    }
    update_manifest(options.output_dir, "scoring", model_stats, config.config_digest);
  }

  if (!stage_wanted(options, {"stats"})) return report::RewardSection{};
  report::RewardSection section = compute_reward_section(config, options.output_dir);
  log_line(options, "[stats] selection rates computed for " + std::to_string(section.models.size()) + " model(s)");
  return section;
}

// --- generation audit ---------------------------------------------------------

namespace {

struct StageRun {
  long n_samples = 0;
  long n_filtered = 0;
  long failures = 0;
  std::string generator_id;
};

StageRun run_generation_stage(const config::AuditConfig& config, const config::GenerationStageSpec& stage,
                              std::span<const corpus::DisclosurePrompt> prompts, const RunOptions& options) {
  const auto& gc = *config.generations;
  auto generator = config::make_generator(stage.generator, config.base_dir);
  auto classifier = config::make_regard_classifier(gc.classifier, config.base_dir);
  std::unique_ptr<regard::ToxicityScorer> toxicity;
  if (gc.toxicity) toxicity = config::make_toxicity_scorer(*gc.toxicity, config.base_dir);

  StageRun run;
  run.generator_id = generator->handle().model_id;
  StageWriter writer(options.output_dir / "generations" / stage.name / "samples.jsonl");
  for (const auto& prompt : prompts) {
    std::vector<scoring::GenerationRecord> records;
    try {
      records = scoring::generate_samples(*generator, prompt.rendered, gc.generation);
    } catch (const std::exception& e) {
      run.failures += gc.generation.samples_per_prompt;
      log_line(options, "[generate:" + stage.name + "] prompt '" + prompt.rendered + "' failed: " + e.what());
      continue;
    }
    std::vector<regard::RegardSample> batch;
    batch.reserve(records.size());
    for (auto& record : records) {
      regard::RegardSample sample;
      sample.prompt = prompt;
      sample.generation = std::move(record);
      batch.push_back(std::move(sample));
    }
    regard::EchoFilterOutcome filtered = regard::filter_echoes(std::move(batch), gc.jaccard_threshold);
    for (auto& sample : filtered.kept) {
      try {
        sample.regard = regard::classify_regard(*classifier, sample.generation.text);
        if (toxicity) sample.toxicity = toxicity->score(sample.generation.text);
      } catch (const std::exception& e) {
        run.failures++;
        log_line(options, "[classify:" + stage.name + "] sample dropped: " + std::string(e.what()));
        continue;
      }
      writer.write(regard::to_json(sample));
      run.n_samples++;
    }
    for (const auto& sample : filtered.dropped) {
      writer.write(regard::to_json(sample));
      run.n_samples++;
      run.n_filtered++;
    }
  }
  writer.commit();
  io::write_file(options.output_dir / "generations" / stage.name / "run.json",
                 json{{"generator_id", run.generator_id},
                      {"n_samples", run.n_samples},
                      {"n_filtered", run.n_filtered},
                      {"failures", run.failures}}
                         .dump(2) +
                     "\n");
  return run;
}

std::vector<regard::RegardSample> load_samples(const std::filesystem::path& path) {
  std::vector<regard::RegardSample> samples;
  io::for_each_jsonl(
      path, [&](std::size_t, const json& j) { samples.push_back(regard::sample_from_json(j)); },
      [&](std::size_t lineno, const std::string&, const std::string& what) {
        fail(errc::unreadable_record, "bad sample at line " + std::to_string(lineno) + ": " + what);
      });
  return samples;
}

long shared_prompt_keys(std::span<const regard::RegardSample> base, std::span<const regard::RegardSample> aligned) {
  auto keys = [](std::span<const regard::RegardSample> samples) {
    std::set<std::string> out;
    for (const auto& s : samples) {
      if (s.filtered || !s.regard) continue;
      out.insert(s.prompt.name + "\x1f" + s.prompt.disclosure_form + "\x1f" + s.prompt.identity);
    }
    return out;
  };
  auto a = keys(base);
  auto b = keys(aligned);
  long shared = 0;
  for (const auto& k : a) shared += b.count(k) ? 1 : 0;
  return shared;
}

}  // namespace

bool generation_intermediates_present(const config::AuditConfig& config, const std::filesystem::path& out_dir) {
  if (!config.generations) return false;
  for (const auto& stage : config.generations->stages) {
    if (!std::filesystem::exists(out_dir / "generations" / stage.name / "samples.jsonl")) return false;
  }
  return true;
}

report::GenerationSection compute_generation_section(const config::AuditConfig& config,
                                                     const std::filesystem::path& out_dir) {
  const auto& gc = *config.generations;
  report::GenerationSection section;
  section.jaccard_threshold = gc.jaccard_threshold;

  std::vector<std::vector<regard::RegardSample>> stage_samples;
  const config::GenerationStageSpec* base_stage = nullptr;
  std::size_t base_index = 0;
  for (std::size_t i = 0; i < gc.stages.size(); ++i) {
    if (gc.stages[i].is_base || gc.stages.size() == 1) {
      base_stage = &gc.stages[i];
      base_index = i;
    }
  }

  for (const auto& stage : gc.stages) {
    auto samples = load_samples(out_dir / "generations" / stage.name / "samples.jsonl");
    report::StageGenerationStats stats_row;
    stats_row.stage = stage.name;
    stats_row.n_samples = static_cast<long>(samples.size());
    for (const auto& s : samples) stats_row.n_filtered += s.filtered ? 1 : 0;
    std::filesystem::path run_path = out_dir / "generations" / stage.name / "run.json";
    if (std::filesystem::exists(run_path)) {
      json run = json::parse(io::read_file(run_path), nullptr, false);
      if (run.is_object()) {
        stats_row.failures = run.value("failures", 0L);
        stats_row.generator_id = run.value("generator_id", "");
      }
    }
    stats_row.disparity = regard::disparity(samples, gc.bootstrap);
    stats_row.breakdown = regard::negative_regard_breakdown(samples);
    stats_row.per_identity = regard::per_identity_negative(samples);
    if (gc.toxicity) stats_row.toxicity = regard::toxicity_proportion(samples, gc.toxicity_threshold);
    section.stages.push_back(std::move(stats_row));
    stage_samples.push_back(std::move(samples));
  }

  std::set<std::string> prompt_keys;
  for (const auto& samples : stage_samples) {
    for (const auto& s : samples)
      prompt_keys.insert(s.prompt.name + "\x1f" + s.prompt.disclosure_form + "\x1f" + s.prompt.identity);
  }
  section.n_prompts = static_cast<long>(prompt_keys.size());

  if (base_stage && gc.stages.size() > 1) {
    const auto& base_samples = stage_samples[base_index];
    for (std::size_t i = 0; i < gc.stages.size(); ++i) {
      if (i == base_index) continue;
      section.stages[i].vs_base = regard::disparity_vs_base(base_samples, stage_samples[i], gc.bootstrap);

      report::ShiftSummary shift;
      shift.base_stage = base_stage->name;
      shift.aligned_stage = gc.stages[i].name;
      shift.threshold = gc.shift_threshold;
      shift.n_prompts_compared = shared_prompt_keys(base_samples, stage_samples[i]);
      shift.candidates = regard::detect_shift(base_samples, stage_samples[i], gc.shift_threshold, gc.shift_sample_n,
                                              gc.shift_sample_seed, gc.shift_metric);
      shift.n_candidates = static_cast<long>(shift.candidates.size());
      for (const auto& c : shift.candidates) shift.n_sampled += c.sampled_for_annotation ? 1 : 0;

      // Annotation export for the sampled candidates: the aligned stage's
      // unfiltered generations for each shifted prompt.
      std::vector<regard::AnnotationItem> items;
      for (const auto& c : shift.candidates) {
        if (!c.sampled_for_annotation) continue;
        std::string texts;
        int shown = 0;
        for (const auto& s : stage_samples[i]) {
          if (s.filtered || !s.regard) continue;
          if (s.prompt.name != c.name || s.prompt.disclosure_form != c.form || s.prompt.identity != c.identity)
            continue;
          if (shown) texts += " ||| ";
          texts += s.generation.text;
          if (++shown == 3) break;
        }
        items.push_back(regard::AnnotationItem{gc.stages[i].name + "|" + c.name + "|" + c.form + "|" + c.identity,
                                               c.name + " " + c.form + " " + c.identity + " and", texts});
      }
      if (!items.empty()) {
        regard::export_annotation_sample(items,
                                         out_dir / "generations" / ("shift_sample_" + gc.stages[i].name + ".csv"));
      }
      section.shifts.push_back(std::move(shift));
    }
  }
  return section;
}

report::GenerationSection run_generation_audit(const config::AuditConfig& config, const RunOptions& options) {
  if (!config.generations) fail(errc::invalid_config, "config has no generations section");
  std::filesystem::create_directories(options.output_dir);
  persist_config(config, options.output_dir);
  const auto& gc = *config.generations;

  auto names = io::read_lines(gc.names_path);
  auto identities = corpus::load_identities(gc.identities_path);
  auto forms = corpus::load_forms(gc.forms_path);
  auto prompts = corpus::build_disclosure_prompts(names, identities, forms);
  log_line(options, "[grid] " + std::to_string(prompts.size()) + " disclosure prompts (" +
                        std::to_string(names.size()) + " names x " + std::to_string(identities.size()) +
                        " identities x " + std::to_string(forms.size()) + " forms)");

  if (stage_wanted(options, {"generate"})) {
    json stage_stats = json::object();
    for (const auto& stage : gc.stages) {
      std::filesystem::path samples_path = options.output_dir / "generations" / stage.name / "samples.jsonl";
      if (options.resume && std::filesystem::exists(samples_path) &&
          resume_valid(options.output_dir, "generations", config.config_digest)) {
        log_line(options, "[generate:" + stage.name + "] reusing " + samples_path.string());
        continue;
      }
      StageRun run = run_generation_stage(config, stage, prompts, options);
      stage_stats[stage.name] = json{{"n_samples", run.n_samples},
                                     {"n_filtered", run.n_filtered},
                                     {"failures", run.failures},
                                     {"generator_id", run.generator_id}};
      double failure_rate =
          run.failures == 0 ? 0.0
                            : static_cast<double>(run.failures) /
                                  static_cast<double>(prompts.size() * gc.generation.samples_per_prompt);
      log_line(options, "[generate:" + stage.name + "] " + std::to_string(run.n_samples) + " samples, " +
                            std::to_string(run.n_filtered) + " echo-filtered, failure rate " +
                            std::to_string(failure_rate));
    }
    stage_stats["inputs"] = json{{gc.names_path.generic_string(), io::file_sha256_hex(gc.names_path)},
                                 {gc.identities_path.generic_string(), io::file_sha256_hex(gc.identities_path)},
                                 {gc.forms_path.generic_string(), io::file_sha256_hex(gc.forms_path)}};
    update_manifest(options.output_dir, "generations", stage_stats, config.config_digest);
  }

  if (!stage_wanted(options, {"stats"})) return report::GenerationSection{};
  report::GenerationSection section = compute_generation_section(config, options.output_dir);
  log_line(options, "[stats] disparity computed for " + std::to_string(section.stages.size()) + " stage(s)");
  return section;
}

// --- corpus scan -----------------------------------------------------------------

bool scan_intermediates_present(const std::filesystem::path& out_dir) {
  return std::filesystem::exists(out_dir / "scan" / "summary.json");
}

report::ScanSection run_scan(const config::AuditConfig& config, const RunOptions& options) {
  if (!config.scan) fail(errc::invalid_config, "config has no scan section");
  std::filesystem::create_directories(options.output_dir);
  persist_config(config, options.output_dir);
  const auto& sc = *config.scan;
  auto terms = io::read_lines(sc.terms_path);

  report::ScanSection section;
  json summary = json::array();
  for (const auto& dataset : sc.datasets) {
    corpus::ScanResult result = corpus::scan_preference_corpus(dataset.path, dataset.name, terms, sc.excerpt_window);
    StageWriter writer(options.output_dir / "scan" / (dataset.name + "_matches.jsonl"));
    for (const auto& match : result.matches) {
      writer.write(json{{"dataset", match.dataset_name},
                        {"record_id", match.record_id},
                        {"matched_terms", match.matched_terms},
                        {"excerpt", match.excerpt}});
    }
    writer.commit();
    report::ScanDatasetStats stats_row;
    stats_row.dataset = dataset.name;
    stats_row.records_scanned = result.records_scanned;
    stats_row.unreadable_records = result.unreadable_records;
    stats_row.matched_records = static_cast<long>(result.matches.size());
    stats_row.per_term_counts = result.per_term_counts;
    json counts = json::object();
    for (const auto& [term, count] : result.per_term_counts) counts[term] = count;
    summary.push_back(json{{"dataset", dataset.name},
                           {"records_scanned", result.records_scanned},
                           {"unreadable_records", result.unreadable_records},
                           {"matched_records", stats_row.matched_records},
                           {"per_term_counts", std::move(counts)}});
    log_line(options, "[scan:" + dataset.name + "] " + std::to_string(stats_row.matched_records) + " of " +
                          std::to_string(result.records_scanned) + " records matched");
    section.datasets.push_back(std::move(stats_row));
  }
  io::write_file(options.output_dir / "scan" / "summary.json", json{{"datasets", std::move(summary)}}.dump(2) + "\n");
  json inputs{{sc.terms_path.generic_string(), io::file_sha256_hex(sc.terms_path)}};
  for (const auto& dataset : sc.datasets)
    inputs[dataset.path.generic_string()] = io::file_sha256_hex(dataset.path);
  update_manifest(options.output_dir, "scan", json{{"datasets", sc.datasets.size()}, {"inputs", std::move(inputs)}},
                  config.config_digest);
  return section;
}

report::ScanSection load_scan_section(const std::filesystem::path& out_dir) {
  json summary = json::parse(io::read_file(out_dir / "scan" / "summary.json"));
  report::ScanSection section;
  for (const auto& d : summary.at("datasets")) {
    report::ScanDatasetStats stats_row;
    stats_row.dataset = d.at("dataset").get<std::string>();
    stats_row.records_scanned = d.at("records_scanned").get<long>();
    stats_row.unreadable_records = d.at("unreadable_records").get<long>();
    stats_row.matched_records = d.at("matched_records").get<long>();
    for (auto& [term, count] : d.at("per_term_counts").items())
      stats_row.per_term_counts.emplace_back(term, count.get<long>());
    section.datasets.push_back(std::move(stats_row));
  }
  return section;
}

// --- report assembly -----------------------------------------------------------

report::AuditReport build_report(const config::AuditConfig& config, const std::filesystem::path& out_dir) {
  report::AuditReport report;
  report.config_digest = config.config_digest;

  auto add_source = [&](const std::filesystem::path& rel) {
    std::filesystem::path full = out_dir / rel;
    if (std::filesystem::exists(full)) report.sources[rel.generic_string()] = io::file_sha256_hex(full);
  };

  if (config.rewards && reward_intermediates_present(config, out_dir)) {
    report.rewards = compute_reward_section(config, out_dir);
    add_source("rewards/pairs.jsonl");
    for (const auto& model : config.rewards->models) {
      add_source(std::filesystem::path("rewards") / model.name / "comparisons.jsonl");
      report.model_ids.push_back(model.policy.model_id());
      report.model_ids.push_back(model.reference.model_id());
    }
  }
  if (config.generations && generation_intermediates_present(config, out_dir)) {
    report.generations = compute_generation_section(config, out_dir);
    for (const auto& stage : config.generations->stages) {
      add_source(std::filesystem::path("generations") / stage.name / "samples.jsonl");
      report.model_ids.push_back(stage.generator.model_id());
    }
  }
  if (config.scan && scan_intermediates_present(out_dir)) {
    report.scan = load_scan_section(out_dir);
    add_source("scan/summary.json");
    for (const auto& dataset : config.scan->datasets) {
      add_source(std::filesystem::path("scan") / (dataset.name + "_matches.jsonl"));
    }
  }
  std::sort(report.model_ids.begin(), report.model_ids.end());
  report.model_ids.erase(std::unique(report.model_ids.begin(), report.model_ids.end()), report.model_ids.end());
  return report;
}

report::ThemeSection ingest_themes(const std::filesystem::path& out_dir,
                                   const std::vector<std::filesystem::path>& annotation_files,
                                   const std::filesystem::path& taxonomy_path) {
  auto taxonomy = io::read_lines(taxonomy_path);

  // Known ids: the union of every annotation sample exported under out_dir.
  std::set<std::string> known_ids;
  auto collect = [&](const std::filesystem::path& path) {
    for (const auto& item : regard::read_annotation_sample(path)) known_ids.insert(item.sample_id);
  };
  for (const auto& entry : std::filesystem::recursive_directory_iterator(out_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name == "annotation_sample.csv" || name.rfind("shift_sample_", 0) == 0) collect(entry.path());
  }

  report::ThemeSection section;
  for (const auto& file : annotation_files) {
    auto records = regard::read_annotations(file);
    report::ThemeEntry entry;
    entry.name = file.stem().string();
    entry.distribution = regard::ingest_annotations(records, taxonomy, known_ids);
    section.entries.push_back(std::move(entry));
  }
  return section;
}

}  // namespace rewardaudit::audit
