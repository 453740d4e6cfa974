#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rewardaudit::scoring {

enum class Role { policy, reference };
enum class BackendKind { local_engine, remote_service, stub };

std::string_view to_string(Role role);
std::string_view to_string(BackendKind kind);

struct ScorerHandle {
  std::string model_id;
  Role role = Role::policy;
  BackendKind backend = BackendKind::stub;
  int context_limit = 4096;  // tokens
};

struct ScoringParams {
  double beta = 1.0;           // DPO temperature; scales rewards, never logprobs
  std::string prompt_template;  // optional "{prompt}" wrapper; empty = raw concatenation

  // Digest of the score-affecting fields only. beta is excluded: the
  // logprob_sum of a completion does not depend on it, so beta sweeps share
  // cache entries.
  std::string digest() const;
  std::string wrap_prompt(std::string_view prompt) const;
};

struct LogProbRecord {
  std::string model_id;
  std::string prompt;      // the prompt actually conditioned on (post-wrap)
  std::string completion;
  double logprob_sum = 0;  // nats, sum over completion tokens, no length normalization
  int completion_token_count = 0;
  std::string params_digest;
};

struct ScoredCompletion {
  double logprob_sum = 0;
  int completion_token_count = 0;
};

struct GenerationConfig {
  double temperature = 1.0;
  double top_p = 0.95;
  double repetition_penalty = 1.03;
  int max_new_tokens = 200;
  int samples_per_prompt = 5;
  std::uint64_t seed = 0;
};

void validate(const GenerationConfig& config);

enum class FinishReason { length, stop, error };
std::string_view to_string(FinishReason reason);
FinishReason finish_reason_from_string(std::string_view s);

struct GenerationRecord {
  std::string model_id;
  std::string prompt;
  int sample_index = 0;
  std::string text;  // continuation only, never echoes the prompt
  FinishReason finish_reason = FinishReason::stop;
};

// Model backend able to return the teacher-forced log-probability of a
// completion conditioned on a prompt.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual const ScorerHandle& handle() const = 0;
  virtual ScoredCompletion score(const std::string& prompt, const std::string& completion) = 0;
  // Batched entry point; remote backends override it to ship one request.
  virtual std::vector<ScoredCompletion> score_batch(std::span<const std::pair<std::string, std::string>> items);
};

class Generator {
 public:
  virtual ~Generator() = default;
  virtual const ScorerHandle& handle() const = 0;
  virtual std::vector<GenerationRecord> generate(const std::string& prompt, const GenerationConfig& config) = 0;
};

// Applies the prompt wrapper, validates inputs, and assembles the record.
LogProbRecord score_completion(Scorer& scorer, std::string_view prompt, std::string_view completion,
                               const ScoringParams& params);

// Validates the config and the backend's output contract (exactly
// samples_per_prompt records, indices in range).
std::vector<GenerationRecord> generate_samples(Generator& generator, std::string_view prompt,
                                               const GenerationConfig& config);

// --- stub backends -------------------------------------------------------
//
// Stubs tokenize on whitespace and score the joint tokenization of
// prompt + completion, counting completion tokens beyond the prompt's token
// length. A completion that merges entirely into the prompt's final word
// still scores one token (the merged joint token).

struct StubTokenization {
  std::vector<std::string> joint;
  std::size_t completion_begin = 0;  // first completion token index in joint
};

StubTokenization stub_tokenize(std::string_view prompt, std::string_view completion, int context_limit);

// Uniform next-token distribution over a fixed vocabulary:
// logprob_sum = k * ln(1/vocab_size) for k completion tokens.
class UniformScorer : public Scorer {
 public:
  UniformScorer(std::string model_id, std::size_t vocab_size, int context_limit = 4096,
                Role role = Role::policy);
  const ScorerHandle& handle() const override { return handle_; }
  ScoredCompletion score(const std::string& prompt, const std::string& completion) override;

 private:
  ScorerHandle handle_;
  std::size_t vocab_size_;
};

// Deterministic pseudo-random per-token log-probabilities derived from a
// seed. context_window = 0 makes tokens independent (exact additivity);
// window w > 0 hashes the w preceding joint tokens into each token's score.
class HashScorer : public Scorer {
 public:
  HashScorer(std::string model_id, std::uint64_t seed, double scale = 3.0, double offset = 0.5,
             int context_window = 0, int context_limit = 4096, Role role = Role::policy);
  const ScorerHandle& handle() const override { return handle_; }
  ScoredCompletion score(const std::string& prompt, const std::string& completion) override;

 private:
  ScorerHandle handle_;
  std::uint64_t seed_;
  double scale_;
  double offset_;
  int context_window_;
};

// Exact (prompt, completion) -> score lookup, the "local-engine" backend for
// precomputed logprobs. Missing entries raise BackendUnavailable
// (non-retryable).
class TableScorer : public Scorer {
 public:
  TableScorer(std::string model_id, int context_limit = 4096, Role role = Role::policy);
  void add(std::string prompt, std::string completion, double logprob_sum, int token_count);
  static std::unique_ptr<TableScorer> from_jsonl(std::string model_id, const std::string& path,
                                                 Role role = Role::policy);
  const ScorerHandle& handle() const override { return handle_; }
  ScoredCompletion score(const std::string& prompt, const std::string& completion) override;

 private:
  struct Key {
    std::string prompt, completion;
    bool operator<(const Key& other) const {
      return prompt != other.prompt ? prompt < other.prompt : completion < other.completion;
    }
  };
  ScorerHandle handle_;
  std::vector<std::pair<Key, ScoredCompletion>> entries_;  // sorted
  bool sorted_ = true;
};

// Scripted generation backend.
//   fixed — every sample is the same configured text
//   echo  — every sample repeats the prompt (degenerate echo source)
//   table — prompt -> configured continuations, cycled over sample_index
//   synth — deterministic words drawn from a small bank via
//           hash(seed, model, prompt, sample_index)
class ScriptedGenerator : public Generator {
 public:
  static std::unique_ptr<ScriptedGenerator> fixed(std::string model_id, std::string text);
  static std::unique_ptr<ScriptedGenerator> echo(std::string model_id);
  static std::unique_ptr<ScriptedGenerator> table(std::string model_id,
                                                  std::vector<std::pair<std::string, std::vector<std::string>>> rows);
  static std::unique_ptr<ScriptedGenerator> table_from_jsonl(std::string model_id, const std::string& path);
  static std::unique_ptr<ScriptedGenerator> synth(std::string model_id, std::uint64_t style_seed,
                                                  std::vector<std::string> word_bank = {});

  const ScorerHandle& handle() const override { return handle_; }
  std::vector<GenerationRecord> generate(const std::string& prompt, const GenerationConfig& config) override;

 private:
  enum class Mode { fixed, echo, table, synth };
  ScriptedGenerator(std::string model_id, Mode mode);

  ScorerHandle handle_;
  Mode mode_;
  std::string fixed_text_;
  std::vector<std::pair<std::string, std::vector<std::string>>> table_;
  std::uint64_t style_seed_ = 0;
  std::vector<std::string> word_bank_;
};

// 64-bit FNV-1a over an arbitrary byte sequence; shared by the hash stubs.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ull);
double hash_unit_interval(std::uint64_t h);

}  // namespace rewardaudit::scoring
