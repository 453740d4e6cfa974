#include "rewardaudit/remote.hpp"

#include <atomic>
#include <chrono>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "rewardaudit/errors.hpp"

namespace rewardaudit::remote {

namespace {

using nlohmann::json;

std::vector<std::string> split_lines(const std::string& body) {
  std::vector<std::string> lines;
  std::istringstream in(body);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

json error_line(const std::string& message, bool retryable) {
  return json{{"error", {{"message", message}, {"retryable", retryable}}}};
}

struct Endpoint {
  std::string host;
  int port = 80;
};

Endpoint parse_endpoint(const std::string& endpoint) {
  std::string rest = endpoint;
  const std::string scheme = "http://";
  if (rest.rfind(scheme, 0) == 0) rest = rest.substr(scheme.size());
  while (!rest.empty() && rest.back() == '/') rest.pop_back();
  Endpoint out;
  auto colon = rest.rfind(':');
  if (colon == std::string::npos) {
    out.host = rest;
  } else {
    out.host = rest.substr(0, colon);
    out.port = std::stoi(rest.substr(colon + 1));
  }
  if (out.host.empty()) fail(errc::invalid_config, "bad endpoint '" + endpoint + "'");
  return out;
}

// One POST of line-delimited requests; lines that come back with a retryable
// error are re-sent (idempotent by content) until attempts run out.
class LineClient {
 public:
  LineClient(const std::string& endpoint, RetryPolicy retry) : ep_(parse_endpoint(endpoint)), retry_(retry) {}

  std::vector<json> exchange(const std::string& path, const std::vector<json>& requests) {
    std::vector<json> responses(requests.size());
    std::vector<std::size_t> pending(requests.size());
    for (std::size_t i = 0; i < pending.size(); ++i) pending[i] = i;

    std::string last_error = "no attempts made";
    for (int attempt = 0; attempt < retry_.max_attempts && !pending.empty(); ++attempt) {
      if (attempt > 0) {
        auto delay = std::chrono::milliseconds(retry_.base_delay_ms << (attempt - 1));
        std::this_thread::sleep_for(delay);
      }
      std::string body;
      for (std::size_t i : pending) {
        body += requests[i].dump();
        body += '\n';
      }
      httplib::Client client(ep_.host, ep_.port);
      client.set_read_timeout(120, 0);
      auto res = client.Post(path, body, "application/x-ndjson");
      if (!res) {
        last_error = "connection to " + ep_.host + ":" + std::to_string(ep_.port) + " failed";
        continue;
      }
      if (res->status != 200) {
        last_error = "server returned HTTP " + std::to_string(res->status);
        continue;
      }
      auto lines = split_lines(res->body);
      if (lines.size() != pending.size()) {
        last_error = "server returned " + std::to_string(lines.size()) + " lines for " +
                     std::to_string(pending.size()) + " requests";
        continue;
      }
      std::vector<std::size_t> still_pending;
      for (std::size_t k = 0; k < lines.size(); ++k) {
        json parsed = json::parse(lines[k], nullptr, false);
        if (parsed.is_discarded()) {
          last_error = "unparseable response line";
          still_pending.push_back(pending[k]);
          continue;
        }
        if (parsed.contains("error")) {
          const auto& err = parsed["error"];
          bool retryable = err.value("retryable", false);
          std::string message = err.value("message", "unspecified backend error");
          if (!retryable) throw backend_error(message, false);
          last_error = message;
          still_pending.push_back(pending[k]);
          continue;
        }
        responses[pending[k]] = std::move(parsed);
      }
      pending = std::move(still_pending);
    }
    if (!pending.empty()) throw backend_error(last_error, true);
    return responses;
  }

 private:
  Endpoint ep_;
  RetryPolicy retry_;
};

}  // namespace

// --- RemoteScorer ---------------------------------------------------------

struct RemoteScorer::Impl {
  LineClient client;
  Impl(const std::string& endpoint, RetryPolicy retry) : client(endpoint, retry) {}
};

RemoteScorer::RemoteScorer(std::string endpoint, std::string model_id, int context_limit, int batch_size,
                           RetryPolicy retry, scoring::Role role)
    : impl_(std::make_unique<Impl>(endpoint, retry)), batch_size_(batch_size < 1 ? 1 : batch_size) {
  handle_ = scoring::ScorerHandle{std::move(model_id), role, scoring::BackendKind::remote_service, context_limit};
}

RemoteScorer::~RemoteScorer() = default;

scoring::ScoredCompletion RemoteScorer::score(const std::string& prompt, const std::string& completion) {
  std::pair<std::string, std::string> item{prompt, completion};
  return score_batch(std::span<const std::pair<std::string, std::string>>(&item, 1)).front();
}

std::vector<scoring::ScoredCompletion> RemoteScorer::score_batch(
    std::span<const std::pair<std::string, std::string>> items) {
  std::vector<scoring::ScoredCompletion> out;
  out.reserve(items.size());
  for (std::size_t begin = 0; begin < items.size(); begin += static_cast<std::size_t>(batch_size_)) {
    std::size_t end = std::min(items.size(), begin + static_cast<std::size_t>(batch_size_));
    std::vector<json> requests;
    requests.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      requests.push_back(
          json{{"model_id", handle_.model_id}, {"prompt", items[i].first}, {"completion", items[i].second}});
    }
    for (const auto& line : impl_->client.exchange("/v1/score", requests)) {
      out.push_back(scoring::ScoredCompletion{line.at("logprob_sum").get<double>(),
                                              line.at("token_count").get<int>()});
    }
  }
  return out;
}

// --- RemoteGenerator ------------------------------------------------------

struct RemoteGenerator::Impl {
  LineClient client;
  Impl(const std::string& endpoint, RetryPolicy retry) : client(endpoint, retry) {}
};

RemoteGenerator::RemoteGenerator(std::string endpoint, std::string model_id, RetryPolicy retry)
    : impl_(std::make_unique<Impl>(endpoint, retry)) {
  handle_ = scoring::ScorerHandle{std::move(model_id), scoring::Role::policy, scoring::BackendKind::remote_service,
                                  1 << 20};
}

RemoteGenerator::~RemoteGenerator() = default;

std::vector<scoring::GenerationRecord> RemoteGenerator::generate(const std::string& prompt,
                                                                 const scoring::GenerationConfig& config) {
  std::vector<json> requests{json{{"model_id", handle_.model_id},
                                  {"prompt", prompt},
                                  {"temperature", config.temperature},
                                  {"top_p", config.top_p},
                                  {"repetition_penalty", config.repetition_penalty},
                                  {"max_new_tokens", config.max_new_tokens},
                                  {"samples_per_prompt", config.samples_per_prompt},
                                  {"seed", config.seed}}};
  auto lines = impl_->client.exchange("/v1/generate", requests);
  std::vector<scoring::GenerationRecord> records;
  int index = 0;
  for (const auto& sample : lines.front().at("samples")) {
    scoring::GenerationRecord record;
    record.model_id = handle_.model_id;
    record.prompt = prompt;
    record.sample_index = index++;
    record.text = sample.at("text").get<std::string>();
    record.finish_reason = scoring::finish_reason_from_string(sample.value("finish_reason", "stop"));
    records.push_back(std::move(record));
  }
  return records;
}

// --- RemoteRegardClassifier -------------------------------------------------

struct RemoteRegardClassifier::Impl {
  LineClient client;
  Impl(const std::string& endpoint, RetryPolicy retry) : client(endpoint, retry) {}
};

RemoteRegardClassifier::RemoteRegardClassifier(std::string endpoint, std::string id, bool fold_other,
                                               RetryPolicy retry)
    : impl_(std::make_unique<Impl>(endpoint, retry)), id_(std::move(id)), fold_other_(fold_other) {}

RemoteRegardClassifier::~RemoteRegardClassifier() = default;

regard::RegardDistribution RemoteRegardClassifier::classify(const std::string& text) {
  std::vector<json> requests{json{{"text", text}}};
  auto line = impl_->client.exchange("/v1/regard", requests).front();
  double p_positive = line.at("p_positive").get<double>();
  double p_neutral = line.at("p_neutral").get<double>();
  double p_negative = line.at("p_negative").get<double>();
  if (line.contains("p_other")) {
    double p_other = line["p_other"].get<double>();
    if (fold_other_) p_neutral += p_other;
    else if (p_other > 1e-6) fail(errc::invalid_config, "classifier returned a 4th class and folding is disabled");
  }
  return regard::RegardDistribution::make(p_positive, p_neutral, p_negative);
}

// --- RemoteToxicityScorer ----------------------------------------------------

struct RemoteToxicityScorer::Impl {
  LineClient client;
  Impl(const std::string& endpoint, RetryPolicy retry) : client(endpoint, retry) {}
};

RemoteToxicityScorer::RemoteToxicityScorer(std::string endpoint, std::string id, RetryPolicy retry)
    : impl_(std::make_unique<Impl>(endpoint, retry)), id_(std::move(id)) {}

RemoteToxicityScorer::~RemoteToxicityScorer() = default;

double RemoteToxicityScorer::score(const std::string& text) {
  std::vector<json> requests{json{{"text", text}}};
  return impl_->client.exchange("/v1/toxicity", requests).front().at("score").get<double>();
}

// --- AuditService -----------------------------------------------------------

struct AuditService::Impl {
  Backends backends;
  httplib::Server server;
  std::thread thread;
  std::atomic<long> requests{0};
  int port = 0;

  explicit Impl(Backends b) : backends(b) {}

  template <class Fn>
  void handle_lines(const httplib::Request& req, httplib::Response& res, Fn&& fn) {
    ++requests;
    std::string out;
    for (const auto& raw : split_lines(req.body)) {
      json line = json::parse(raw, nullptr, false);
      json reply;
      if (line.is_discarded()) {
        reply = error_line("unparseable request line", false);
      } else {
        try {
          reply = fn(line);
        } catch (const backend_error& e) {
          reply = error_line(e.what(), e.retryable());
        } catch (const error& e) {
          reply = error_line(e.what(), false);
        } catch (const std::exception& e) {
          reply = error_line(e.what(), false);
        }
      }
      out += reply.dump();
      out += '\n';
    }
    res.set_content(out, "application/x-ndjson");
  }

  void install_routes() {
    server.Post("/v1/score", [this](const httplib::Request& req, httplib::Response& res) {
      handle_lines(req, res, [this](const json& line) {
        if (!backends.scorer) throw backend_error("no scorer configured", false);
        auto scored = backends.scorer->score(line.at("prompt").get<std::string>(),
                                             line.at("completion").get<std::string>());
        return json{{"logprob_sum", scored.logprob_sum}, {"token_count", scored.completion_token_count}};
      });
    });
    server.Post("/v1/generate", [this](const httplib::Request& req, httplib::Response& res) {
      handle_lines(req, res, [this](const json& line) {
        if (!backends.generator) throw backend_error("no generator configured", false);
        scoring::GenerationConfig config;
        config.temperature = line.value("temperature", config.temperature);
        config.top_p = line.value("top_p", config.top_p);
        config.repetition_penalty = line.value("repetition_penalty", config.repetition_penalty);
        config.max_new_tokens = line.value("max_new_tokens", config.max_new_tokens);
        config.samples_per_prompt = line.value("samples_per_prompt", config.samples_per_prompt);
        config.seed = line.value("seed", config.seed);
        auto records = scoring::generate_samples(*backends.generator, line.at("prompt").get<std::string>(), config);
        json samples = json::array();
        for (const auto& r : records) {
          samples.push_back(json{{"text", r.text}, {"finish_reason", std::string(scoring::to_string(r.finish_reason))}});
        }
        return json{{"samples", std::move(samples)}};
      });
    });
    server.Post("/v1/regard", [this](const httplib::Request& req, httplib::Response& res) {
      handle_lines(req, res, [this](const json& line) {
        if (!backends.classifier) throw backend_error("no classifier configured", false);
        auto d = regard::classify_regard(*backends.classifier, line.at("text").get<std::string>());
        return json{{"p_positive", d.p_positive}, {"p_neutral", d.p_neutral}, {"p_negative", d.p_negative}};
      });
    });
    server.Post("/v1/toxicity", [this](const httplib::Request& req, httplib::Response& res) {
      handle_lines(req, res, [this](const json& line) {
        if (!backends.toxicity) throw backend_error("no toxicity scorer configured", false);
        return json{{"score", backends.toxicity->score(line.at("text").get<std::string>())}};
      });
    });
  }
};

AuditService::AuditService(Backends backends) : impl_(std::make_unique<Impl>(backends)) { impl_->install_routes(); }

AuditService::~AuditService() { stop(); }

int AuditService::start(const std::string& host, int port) {
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port(host);
  } else {
    if (!impl_->server.bind_to_port(host, port)) fail(errc::backend_unavailable, "cannot bind port");
    impl_->port = port;
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return impl_->port;
}

long AuditService::requests_served() const { return impl_->requests.load(); }

void AuditService::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
  if (impl_ && impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace rewardaudit::remote
