#include "rewardaudit/scoring.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "rewardaudit/errors.hpp"
#include "rewardaudit/io.hpp"
#include "rewardaudit/text.hpp"

namespace rewardaudit::scoring {

std::string_view to_string(Role role) { return role == Role::policy ? "policy" : "reference"; }

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::local_engine: return "local-engine";
    case BackendKind::remote_service: return "remote-service";
    case BackendKind::stub: return "stub";
  }
  return "?";
}

std::string ScoringParams::digest() const {
  nlohmann::json j{{"prompt_template", prompt_template}};
  return io::sha256_hex(j.dump()).substr(0, 16);
}

std::string ScoringParams::wrap_prompt(std::string_view prompt) const {
  if (prompt_template.empty()) return std::string(prompt);
  std::size_t pos = prompt_template.find("{prompt}");
  if (pos == std::string::npos)
    fail(errc::invalid_config, "prompt_template must contain {prompt}: " + prompt_template);
  std::string out = prompt_template.substr(0, pos);
  out += prompt;
  out += prompt_template.substr(pos + 8);
  return out;
}

void validate(const GenerationConfig& config) {
  if (config.samples_per_prompt < 1) fail(errc::invalid_config, "samples_per_prompt must be >= 1");
  if (config.max_new_tokens < 1) fail(errc::invalid_config, "max_new_tokens must be >= 1");
  if (config.top_p <= 0.0 || config.top_p > 1.0) fail(errc::invalid_config, "top_p must be in (0,1]");
}

std::string_view to_string(FinishReason reason) {
  switch (reason) {
    case FinishReason::length: return "length";
    case FinishReason::stop: return "stop";
    case FinishReason::error: return "error";
  }
  return "?";
}

FinishReason finish_reason_from_string(std::string_view s) {
  if (s == "length") return FinishReason::length;
  if (s == "stop") return FinishReason::stop;
  if (s == "error") return FinishReason::error;
  fail(errc::invalid_config, "unknown finish reason '" + std::string(s) + "'");
}

std::vector<ScoredCompletion> Scorer::score_batch(std::span<const std::pair<std::string, std::string>> items) {
  std::vector<ScoredCompletion> out;
  out.reserve(items.size());
  for (const auto& [prompt, completion] : items) out.push_back(score(prompt, completion));
  return out;
}

LogProbRecord score_completion(Scorer& scorer, std::string_view prompt, std::string_view completion,
                               const ScoringParams& params) {
  if (completion.empty()) fail(errc::empty_completion, "completion must be non-empty");
  LogProbRecord record;
  record.model_id = scorer.handle().model_id;
  record.prompt = params.wrap_prompt(prompt);
  record.completion = std::string(completion);
  ScoredCompletion scored = scorer.score(record.prompt, record.completion);
  record.logprob_sum = scored.logprob_sum;
  record.completion_token_count = scored.completion_token_count;
  record.params_digest = params.digest();
  if (!std::isfinite(record.logprob_sum)) fail(errc::non_finite_input, "backend returned non-finite logprob");
  return record;
}

std::vector<GenerationRecord> generate_samples(Generator& generator, std::string_view prompt,
                                               const GenerationConfig& config) {
  validate(config);
  std::vector<GenerationRecord> records = generator.generate(std::string(prompt), config);
  if (records.size() != static_cast<std::size_t>(config.samples_per_prompt))
    fail(errc::backend_unavailable, "backend returned " + std::to_string(records.size()) + " samples, expected " +
                                        std::to_string(config.samples_per_prompt));
  for (int i = 0; i < config.samples_per_prompt; ++i) {
    if (records[i].sample_index != i) fail(errc::backend_unavailable, "backend sample indices out of order");
  }
  return records;
}

StubTokenization stub_tokenize(std::string_view prompt, std::string_view completion, int context_limit) {
  std::string joint_text(prompt);
  joint_text += completion;
  StubTokenization out;
  out.joint = text::whitespace_tokens(joint_text);
  if (static_cast<int>(out.joint.size()) > context_limit)
    fail(errc::context_overflow, std::to_string(out.joint.size()) + " tokens exceed context limit " +
                                     std::to_string(context_limit));
  std::size_t prompt_tokens = text::whitespace_tokens(prompt).size();
  if (out.joint.empty()) fail(errc::empty_completion, "no tokens in prompt+completion");
  // Merged boundary word: attribute it to the completion.
  out.completion_begin = prompt_tokens >= out.joint.size() ? out.joint.size() - 1 : prompt_tokens;
  return out;
}

UniformScorer::UniformScorer(std::string model_id, std::size_t vocab_size, int context_limit, Role role)
    : vocab_size_(vocab_size) {
  if (vocab_size_ < 1) fail(errc::invalid_config, "vocab_size must be >= 1");
  handle_ = ScorerHandle{std::move(model_id), role, BackendKind::stub, context_limit};
}

ScoredCompletion UniformScorer::score(const std::string& prompt, const std::string& completion) {
  StubTokenization toks = stub_tokenize(prompt, completion, handle_.context_limit);
  auto k = static_cast<double>(toks.joint.size() - toks.completion_begin);
  return ScoredCompletion{-k * std::log(static_cast<double>(vocab_size_)),
                          static_cast<int>(toks.joint.size() - toks.completion_begin)};
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

double hash_unit_interval(std::uint64_t h) {
  // Top 53 bits -> [0, 1).
  return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
}

HashScorer::HashScorer(std::string model_id, std::uint64_t seed, double scale, double offset, int context_window,
                       int context_limit, Role role)
    : seed_(seed), scale_(scale), offset_(offset), context_window_(context_window) {
  if (scale_ < 0 || offset_ <= 0) fail(errc::invalid_config, "HashScorer needs offset > 0 and scale >= 0");
  handle_ = ScorerHandle{std::move(model_id), role, BackendKind::stub, context_limit};
}

ScoredCompletion HashScorer::score(const std::string& prompt, const std::string& completion) {
  StubTokenization toks = stub_tokenize(prompt, completion, handle_.context_limit);
  double sum = 0;
  for (std::size_t i = toks.completion_begin; i < toks.joint.size(); ++i) {
    std::uint64_t h = seed_ ^ 0x9e3779b97f4a7c15ull;
    std::size_t ctx_begin = context_window_ > 0 && i >= static_cast<std::size_t>(context_window_)
                                ? i - static_cast<std::size_t>(context_window_)
                                : (context_window_ > 0 ? 0 : i);
    for (std::size_t j = ctx_begin; j < i; ++j) {
      h = fnv1a64(toks.joint[j], h);
      h = fnv1a64("\x1f", h);
    }
    h = fnv1a64(toks.joint[i], h);
    sum += -(offset_ + scale_ * hash_unit_interval(h));
  }
  return ScoredCompletion{sum, static_cast<int>(toks.joint.size() - toks.completion_begin)};
}

TableScorer::TableScorer(std::string model_id, int context_limit, Role role) {
  handle_ = ScorerHandle{std::move(model_id), role, BackendKind::local_engine, context_limit};
}

void TableScorer::add(std::string prompt, std::string completion, double logprob_sum, int token_count) {
  entries_.push_back({Key{std::move(prompt), std::move(completion)}, ScoredCompletion{logprob_sum, token_count}});
  sorted_ = false;
}

std::unique_ptr<TableScorer> TableScorer::from_jsonl(std::string model_id, const std::string& path, Role role) {
  auto scorer = std::make_unique<TableScorer>(std::move(model_id), 4096, role);
  io::for_each_jsonl(
      path,
      [&](std::size_t, const io::json& j) {
        scorer->add(j.at("prompt").get<std::string>(), j.at("completion").get<std::string>(),
                    j.at("logprob_sum").get<double>(), j.value("token_count", 1));
      },
      [&](std::size_t lineno, const std::string&, const std::string& what) {
        fail(errc::invalid_config, "bad score table line " + std::to_string(lineno) + " in " + path + ": " + what);
      });
  return scorer;
}

ScoredCompletion TableScorer::score(const std::string& prompt, const std::string& completion) {
  if (!sorted_) {
    std::sort(entries_.begin(), entries_.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    sorted_ = true;
  }
  Key key{prompt, completion};
  auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                             [](const auto& entry, const Key& k) { return entry.first < k; });
  if (it == entries_.end() || it->first.prompt != prompt || it->first.completion != completion)
    throw backend_error("no table entry for prompt '" + prompt + "'", /*retryable=*/false);
  return it->second;
}

ScriptedGenerator::ScriptedGenerator(std::string model_id, Mode mode) : mode_(mode) {
  handle_ = ScorerHandle{std::move(model_id), Role::policy, BackendKind::stub, 1 << 20};
}

std::unique_ptr<ScriptedGenerator> ScriptedGenerator::fixed(std::string model_id, std::string text) {
  auto g = std::unique_ptr<ScriptedGenerator>(new ScriptedGenerator(std::move(model_id), Mode::fixed));
  g->fixed_text_ = std::move(text);
  return g;
}

std::unique_ptr<ScriptedGenerator> ScriptedGenerator::echo(std::string model_id) {
  return std::unique_ptr<ScriptedGenerator>(new ScriptedGenerator(std::move(model_id), Mode::echo));
}

std::unique_ptr<ScriptedGenerator> ScriptedGenerator::table(
    std::string model_id, std::vector<std::pair<std::string, std::vector<std::string>>> rows) {
  auto g = std::unique_ptr<ScriptedGenerator>(new ScriptedGenerator(std::move(model_id), Mode::table));
  g->table_ = std::move(rows);
  std::sort(g->table_.begin(), g->table_.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return g;
}

std::unique_ptr<ScriptedGenerator> ScriptedGenerator::table_from_jsonl(std::string model_id, const std::string& path) {
  std::vector<std::pair<std::string, std::vector<std::string>>> rows;
  io::for_each_jsonl(
      path,
      [&](std::size_t, const io::json& j) {
        rows.emplace_back(j.at("prompt").get<std::string>(), j.at("samples").get<std::vector<std::string>>());
      },
      [&](std::size_t lineno, const std::string&, const std::string& what) {
        fail(errc::invalid_config, "bad generator table line " + std::to_string(lineno) + " in " + path + ": " + what);
      });
  return table(std::move(model_id), std::move(rows));
}

std::unique_ptr<ScriptedGenerator> ScriptedGenerator::synth(std::string model_id, std::uint64_t style_seed,
                                                            std::vector<std::string> word_bank) {
  auto g = std::unique_ptr<ScriptedGenerator>(new ScriptedGenerator(std::move(model_id), Mode::synth));
  g->style_seed_ = style_seed;
  if (word_bank.empty()) {
    word_bank = {"felt",    "welcomed", "by",      "their",   "community", "and",     "thrived", "at",
                 "work",    "every",    "day",     "while",   "friends",   "offered", "support", "through",
                 "changes", "big",      "small",   "they",    "found",     "joy",     "in",      "quiet",
                 "moments", "afraid",   "rejected", "alone",   "struggled", "hardship"};
  }
  g->word_bank_ = std::move(word_bank);
  return g;
}

std::vector<GenerationRecord> ScriptedGenerator::generate(const std::string& prompt, const GenerationConfig& config) {
  std::vector<GenerationRecord> out;
  out.reserve(static_cast<std::size_t>(config.samples_per_prompt));
  for (int s = 0; s < config.samples_per_prompt; ++s) {
    GenerationRecord record;
    record.model_id = handle_.model_id;
    record.prompt = prompt;
    record.sample_index = s;
    record.finish_reason = FinishReason::stop;
    switch (mode_) {
      case Mode::fixed:
        record.text = fixed_text_;
        break;
      case Mode::echo:
        record.text = prompt;
        break;
      case Mode::table: {
        auto it = std::lower_bound(table_.begin(), table_.end(), prompt,
                                   [](const auto& row, const std::string& p) { return row.first < p; });
        if (it == table_.end() || it->first != prompt)
          throw backend_error("no generator table entry for prompt '" + prompt + "'", /*retryable=*/false);
        record.text = it->second[static_cast<std::size_t>(s) % it->second.size()];
        break;
      }
      case Mode::synth: {
        std::uint64_t h = fnv1a64(prompt, style_seed_ ^ config.seed ^ 0x517cc1b727220a95ull);
        h = fnv1a64(handle_.model_id, h);
        h ^= static_cast<std::uint64_t>(s) * 0x2545f4914f6cdd1dull;
        int words = 6 + static_cast<int>(h % 11);
        if (words > config.max_new_tokens) {
          words = config.max_new_tokens;
          record.finish_reason = FinishReason::length;
        }
        std::string hashed_text;
        std::uint64_t state = h;
        for (int w = 0; w < words; ++w) {
          state = state * 6364136223846793005ull + 1442695040888963407ull;
          if (w) hashed_text += ' ';
          hashed_text += word_bank_[(state >> 33) % word_bank_.size()];
        }
        record.text = hashed_text;
        break;
      }
    }
    out.push_back(std::move(record));
  }
  return out;
}

}  // namespace rewardaudit::scoring
