#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "gradeprobe/grader.hpp"

namespace gradeprobe {

/// Chat-completions client configuration. Decoding parameters default to
/// greedy: temperature 0, top_p 0, max_tokens 1024, seed 42.
struct RemoteGraderConfig {
  std::string base_url = "http://127.0.0.1:8080";
  std::string path = "/v1/chat/completions";
  std::string model = "default";
  std::string auth_token;  // sent as "Authorization: Bearer <token>" when set

  int max_tokens = 1024;
  double temperature = 0.0;
  double top_p = 0.0;
  std::uint64_t seed = 42;
  bool send_seed = true;

  int max_attempts = 3;           // total tries per request
  int retry_initial_delay_ms = 250;
  int retry_max_delay_ms = 2000;
  int max_inflight = 4;           // cross-thread in-flight request cap
  int min_request_interval_ms = 0;
  int timeout_ms = 30000;

  bool log_decoding_note = true;  // one-line note that top-k is not sent
};

/// Black-box grader over a chat-completions-compatible endpoint. Sends the
/// prompt as the sole user message, parses the first choice's content with
/// parse_grade, and retries transient failures (connection errors, 5xx) with
/// capped exponential backoff. Safe to share across threads; the in-flight
/// cap is the only cross-request coordination.
///
/// Throws TransportError when retries are exhausted and EndpointError on
/// non-retryable statuses. An unparseable reply is a value, not an error.
class RemoteGrader final : public GradingModel {
public:
  explicit RemoteGrader(RemoteGraderConfig config);
  ~RemoteGrader() override;

  RemoteGrader(const RemoteGrader&) = delete;
  RemoteGrader& operator=(const RemoteGrader&) = delete;

  Capability capability() const override { return Capability::BlackBox; }
  std::string name() const override;
  GradeOutcome grade(const std::string& prompt_text) const override;

  const RemoteGraderConfig& config() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace gradeprobe
