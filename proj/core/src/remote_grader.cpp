#include "gradeprobe/remote_grader.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "gradeprobe/errors.hpp"

namespace gradeprobe {

using nlohmann::json;

struct RemoteGrader::Impl {
  RemoteGraderConfig config;

  mutable std::mutex mutex;
  mutable std::condition_variable slot_free;
  mutable int inflight = 0;
  mutable std::chrono::steady_clock::time_point last_send{};

  explicit Impl(RemoteGraderConfig cfg) : config(std::move(cfg)) {}

  void acquire_slot() const {
    std::unique_lock lock(mutex);
    slot_free.wait(lock, [this] { return inflight < config.max_inflight; });
    ++inflight;
    if (config.min_request_interval_ms > 0) {
      const auto interval = std::chrono::milliseconds(config.min_request_interval_ms);
      const auto now = std::chrono::steady_clock::now();
      const auto earliest = last_send + interval;
      if (earliest > now) {
        lock.unlock();
        std::this_thread::sleep_for(earliest - now);
        lock.lock();
      }
      last_send = std::chrono::steady_clock::now();
    }
  }

  void release_slot() const {
    {
      std::lock_guard lock(mutex);
      --inflight;
    }
    slot_free.notify_one();
  }
};

RemoteGrader::RemoteGrader(RemoteGraderConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {
  const auto& cfg = impl_->config;
  if (cfg.max_attempts < 1) throw ConfigError("remote grader: max_attempts must be >= 1");
  if (cfg.max_inflight < 1) throw ConfigError("remote grader: max_inflight must be >= 1");
  if (cfg.log_decoding_note) {
    std::fprintf(stderr,
                 "remote grader: greedy decoding requested; sending temperature=%.0f top_p=%.0f,"
                 " top_k is not part of the wire format and is omitted\n",
                 cfg.temperature, cfg.top_p);
  }
}

RemoteGrader::~RemoteGrader() = default;

std::string RemoteGrader::name() const { return "remote:" + impl_->config.model; }

const RemoteGraderConfig& RemoteGrader::config() const { return impl_->config; }

GradeOutcome RemoteGrader::grade(const std::string& prompt_text) const {
  const auto& cfg = impl_->config;

  json body;
  body["model"] = cfg.model;
  body["messages"] = json::array({json{{"role", "user"}, {"content", prompt_text}}});
  body["temperature"] = cfg.temperature;
  body["top_p"] = cfg.top_p;
  body["max_tokens"] = cfg.max_tokens;
  if (cfg.send_seed) body["seed"] = cfg.seed;
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!cfg.auth_token.empty()) headers.emplace("Authorization", "Bearer " + cfg.auth_token);

  impl_->acquire_slot();
  struct SlotGuard {
    const Impl* impl;
    ~SlotGuard() { impl->release_slot(); }
  } guard{impl_.get()};

  std::string last_body;
  std::string last_error = "no attempt made";

  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    if (attempt > 0) {
      const int shift = std::min(attempt - 1, 16);
      const long delay = std::min<long>(
          static_cast<long>(cfg.retry_initial_delay_ms) << shift, cfg.retry_max_delay_ms);
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }

    httplib::Client client(cfg.base_url);
    client.set_connection_timeout(0, cfg.timeout_ms * 1000L);
    client.set_read_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000L);

    auto result = client.Post(cfg.path, headers, payload, "application/json");
    if (!result) {
      last_error = httplib::to_string(result.error());
      continue;  // connection-level failure, retry
    }

    last_body = result->body;
    if (result->status >= 500) {
      last_error = "server status " + std::to_string(result->status);
      continue;  // transient, retry
    }
    if (result->status < 200 || result->status >= 300)
      throw EndpointError(result->status, result->body);

    std::string content;
    try {
      const json reply = json::parse(result->body);
      content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw EndpointError(result->status,
                          std::string("malformed chat response: ") + e.what());
    }

    GradeOutcome outcome;
    outcome.raw_text = content;
    outcome.label = parse_grade(content);
    return outcome;
  }

  throw TransportError("remote grader: " + std::to_string(cfg.max_attempts) +
                       " attempts failed (last: " + last_error +
                       (last_body.empty() ? "" : ", body: " + last_body) + ")");
}

}  // namespace gradeprobe
