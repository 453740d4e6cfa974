#pragma once

#include <memory>
#include <string>

#include "rewardaudit/regard.hpp"
#include "rewardaudit/scoring.hpp"

namespace rewardaudit::remote {

// Wire protocol (UTF-8, line-delimited JSON, one object per line; responses
// align with request lines by index; a line may instead be
// {"error": {"message": ..., "retryable": bool}}):
//   POST /v1/score     {"model_id","prompt","completion"} -> {"logprob_sum","token_count"}
//   POST /v1/generate  {"model_id","prompt",<GenerationConfig fields>} -> {"samples":[{"text","finish_reason"},...]}
//   POST /v1/regard    {"text"} -> {"p_positive","p_neutral","p_negative"[,"p_other"]}
//   POST /v1/toxicity  {"text"} -> {"score"}

struct RetryPolicy {
  int max_attempts = 4;
  int base_delay_ms = 100;  // doubled per attempt
};

class RemoteScorer : public scoring::Scorer {
 public:
  RemoteScorer(std::string endpoint, std::string model_id, int context_limit = 4096, int batch_size = 64,
               RetryPolicy retry = {}, scoring::Role role = scoring::Role::policy);
  ~RemoteScorer() override;
  const scoring::ScorerHandle& handle() const override { return handle_; }
  scoring::ScoredCompletion score(const std::string& prompt, const std::string& completion) override;
  std::vector<scoring::ScoredCompletion> score_batch(
      std::span<const std::pair<std::string, std::string>> items) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  scoring::ScorerHandle handle_;
  int batch_size_;
};

class RemoteGenerator : public scoring::Generator {
 public:
  RemoteGenerator(std::string endpoint, std::string model_id, RetryPolicy retry = {});
  ~RemoteGenerator() override;
  const scoring::ScorerHandle& handle() const override { return handle_; }
  std::vector<scoring::GenerationRecord> generate(const std::string& prompt,
                                                  const scoring::GenerationConfig& config) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  scoring::ScorerHandle handle_;
};

class RemoteRegardClassifier : public regard::RegardClassifier {
 public:
  // fold_other: a fourth "other" probability is folded into neutral.
  RemoteRegardClassifier(std::string endpoint, std::string id = "remote-regard", bool fold_other = true,
                         RetryPolicy retry = {});
  ~RemoteRegardClassifier() override;
  std::string id() const override { return id_; }
  regard::RegardDistribution classify(const std::string& text) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string id_;
  bool fold_other_;
};

class RemoteToxicityScorer : public regard::ToxicityScorer {
 public:
  RemoteToxicityScorer(std::string endpoint, std::string id = "remote-toxicity", RetryPolicy retry = {});
  ~RemoteToxicityScorer() override;
  std::string id() const override { return id_; }
  double score(const std::string& text) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string id_;
};

// Serves any local backends over the protocol above. Used by tests and by
// deployments that score with a separate process.
class AuditService {
 public:
  struct Backends {
    scoring::Scorer* scorer = nullptr;
    scoring::Generator* generator = nullptr;
    regard::RegardClassifier* classifier = nullptr;
    regard::ToxicityScorer* toxicity = nullptr;
  };

  explicit AuditService(Backends backends);
  ~AuditService();

  // Binds and serves on a background thread; returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  void stop();
  long requests_served() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace rewardaudit::remote
