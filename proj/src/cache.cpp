#include "rewardaudit/cache.hpp"

#include <fstream>

#include <json.hpp>

#include "rewardaudit/errors.hpp"
#include "rewardaudit/io.hpp"

namespace rewardaudit::scoring {

namespace {

using nlohmann::json;

json record_to_json(const CacheKey& key, const LogProbRecord& record) {
  return json{{"key", key.str()},
              {"model_id", record.model_id},
              {"prompt", record.prompt},
              {"completion", record.completion},
              {"logprob_sum", record.logprob_sum},
              {"completion_token_count", record.completion_token_count},
              {"params_digest", record.params_digest}};
}

}  // namespace

std::string CacheKey::str() const {
  return model_id + ":" + prompt_digest + ":" + completion_digest + ":" + params_digest;
}

CacheKey CacheKey::for_call(std::string_view model_id, std::string_view wrapped_prompt, std::string_view completion,
                            std::string_view params_digest) {
  return CacheKey{std::string(model_id), io::sha256_hex(wrapped_prompt), io::sha256_hex(completion),
                  std::string(params_digest)};
}

ScoreCache::ScoreCache(std::filesystem::path file) : file_(std::move(file)), persistent_(true) {
  if (file_.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(file_.parent_path(), ec);
  }
  std::ifstream in(file_, std::ios::binary);
  std::string line;
  std::size_t lineno = 0;
  bool at_eof = !in;  // absent file = fresh cache
  while (!at_eof) {
    if (!std::getline(in, line)) break;
    at_eof = in.eof();
    ++lineno;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    bool ok = !j.is_discarded() && j.is_object() && j.contains("key") && j.contains("logprob_sum");
    if (!ok) {
      // A torn final line is the normal crash-during-append case.
      if (!at_eof) ++corrupt_entries_;
      continue;
    }
    try {
      LogProbRecord record;
      record.model_id = j.at("model_id").get<std::string>();
      record.prompt = j.at("prompt").get<std::string>();
      record.completion = j.at("completion").get<std::string>();
      record.logprob_sum = j.at("logprob_sum").get<double>();
      record.completion_token_count = j.at("completion_token_count").get<int>();
      record.params_digest = j.at("params_digest").get<std::string>();
      index_[j.at("key").get<std::string>()] = std::move(record);
    } catch (const json::exception&) {
      if (!at_eof) ++corrupt_entries_;
    }
  }
  in.close();
  appender_.open(file_, std::ios::binary | std::ios::app);
  if (!appender_) fail(errc::unwritable_output, "cannot open cache " + file_.string() + " for append");
}

std::optional<LogProbRecord> ScoreCache::get(const CacheKey& key) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = index_.find(key.str());
  if (it == index_.end()) {
    ++misses_;
    return std::nullopt;
  }
  ++hits_;
  return it->second;
}

void ScoreCache::put(const CacheKey& key, const LogProbRecord& record) {
  std::lock_guard<std::mutex> lock(mutex_);
  index_[key.str()] = record;
  if (persistent_) {
    appender_ << record_to_json(key, record).dump() << '\n';
    appender_.flush();
    if (!appender_) fail(errc::unwritable_output, "cannot append to cache " + file_.string());
  }
}

std::size_t ScoreCache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return index_.size();
}

LogProbRecord score_completion_cached(Scorer& scorer, std::string_view prompt, std::string_view completion,
                                      const ScoringParams& params, ScoreCache* cache) {
  if (!cache) return score_completion(scorer, prompt, completion, params);
  std::string wrapped = params.wrap_prompt(prompt);
  CacheKey key = CacheKey::for_call(scorer.handle().model_id, wrapped, completion, params.digest());
  if (auto hit = cache->get(key)) return *hit;
  LogProbRecord record = score_completion(scorer, prompt, completion, params);
  cache->put(key, record);
  return record;
}

}  // namespace rewardaudit::scoring
