#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace gradeprobe {

/// One declarative reply rule. Exactly one matcher should be set; rules are
/// tried in order against the last user message.
struct StubRule {
  std::string contains;
  std::string ends_with;  // compared after trimming trailing whitespace
  std::string equals;
  std::string reply;
};

/// Canned grader script served over the chat-completions wire format.
struct StubScript {
  std::string default_reply = "Result: Incorrect";
  std::vector<StubRule> rules;
  int fail_requests = 0;  // answer 500 to this many requests first

  static StubScript from_json_text(const std::string& text);
  static StubScript from_file(const std::filesystem::path& path);
  std::string to_json_text() const;
};

/// Minimal loopback chat-completions server driven by a StubScript. Used by
/// tests and by the `stub-serve` CLI mode so remote-path runs need no real
/// endpoint.
class StubServer {
public:
  explicit StubServer(StubScript script, std::string path = "/v1/chat/completions");
  ~StubServer();

  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  /// Binds 127.0.0.1 and starts serving on a background thread. port 0
  /// picks an ephemeral port. Returns the bound port.
  int start(int port = 0);
  void stop();

  int port() const;
  std::string base_url() const;
  const std::string& path() const;

  long request_count() const;
  std::string last_request_body() const;
  std::string last_auth_header() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace gradeprobe
