#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "rewardaudit/scoring.hpp"

namespace rewardaudit::scoring {

struct CacheKey {
  std::string model_id;
  std::string prompt_digest;
  std::string completion_digest;
  std::string params_digest;

  std::string str() const;
  static CacheKey for_call(std::string_view model_id, std::string_view wrapped_prompt, std::string_view completion,
                           std::string_view params_digest);
};

// Append-only record log with an in-memory index. A corrupt trailing line
// (crash mid-append) is tolerated silently; corrupt interior lines are
// skipped and counted. Safe for concurrent get/put; identical keys always
// carry identical records by the scoring determinism contract, so
// last-write-wins is harmless.
class ScoreCache {
 public:
  ScoreCache() = default;                              // in-memory only
  explicit ScoreCache(std::filesystem::path file);     // loads + appends

  std::optional<LogProbRecord> get(const CacheKey& key) const;
  void put(const CacheKey& key, const LogProbRecord& record);

  std::size_t size() const;
  long corrupt_entries_skipped() const { return corrupt_entries_; }
  long hits() const { return hits_; }
  long misses() const { return misses_; }

 private:
  mutable std::mutex mutex_;
  std::unordered_map<std::string, LogProbRecord> index_;
  std::filesystem::path file_;
  std::ofstream appender_;
  bool persistent_ = false;
  long corrupt_entries_ = 0;
  mutable long hits_ = 0;
  mutable long misses_ = 0;
};

// score_completion with read-through caching; cache == nullptr disables
// caching entirely (the two paths must agree record-for-record).
LogProbRecord score_completion_cached(Scorer& scorer, std::string_view prompt, std::string_view completion,
                                      const ScoringParams& params, ScoreCache* cache);

}  // namespace rewardaudit::scoring
