#include "gradeprobe/stub_server.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "gradeprobe/errors.hpp"

namespace gradeprobe {

using nlohmann::json;

namespace {

std::string trim_right(std::string text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
  return text;
}

bool rule_matches(const StubRule& rule, const std::string& content) {
  if (!rule.contains.empty()) return content.find(rule.contains) != std::string::npos;
  if (!rule.ends_with.empty()) {
    const std::string trimmed = trim_right(content);
    return trimmed.size() >= rule.ends_with.size() &&
           trimmed.compare(trimmed.size() - rule.ends_with.size(), rule.ends_with.size(),
                           rule.ends_with) == 0;
  }
  if (!rule.equals.empty()) return content == rule.equals;
  return false;
}

}  // namespace

StubScript StubScript::from_json_text(const std::string& text) {
  json parsed;
  try {
    parsed = json::parse(text);
  } catch (const json::parse_error& e) {
    throw LoadError(std::string("invalid stub script: ") + e.what());
  }

  StubScript script;
  script.default_reply = parsed.value("default_reply", script.default_reply);
  script.fail_requests = parsed.value("fail_requests", 0);
  for (const auto& entry : parsed.value("rules", json::array())) {
    StubRule rule;
    rule.contains = entry.value("contains", "");
    rule.ends_with = entry.value("ends_with", "");
    rule.equals = entry.value("equals", "");
    rule.reply = entry.value("reply", "");
    if (rule.contains.empty() && rule.ends_with.empty() && rule.equals.empty())
      throw LoadError("stub script rule needs one of contains/ends_with/equals");
    script.rules.push_back(std::move(rule));
  }
  return script;
}

StubScript StubScript::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open stub script " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str());
}

std::string StubScript::to_json_text() const {
  json out;
  out["default_reply"] = default_reply;
  out["fail_requests"] = fail_requests;
  out["rules"] = json::array();
  for (const auto& rule : rules) {
    json entry;
    if (!rule.contains.empty()) entry["contains"] = rule.contains;
    if (!rule.ends_with.empty()) entry["ends_with"] = rule.ends_with;
    if (!rule.equals.empty()) entry["equals"] = rule.equals;
    entry["reply"] = rule.reply;
    out["rules"].push_back(std::move(entry));
  }
  return out.dump(2) + "\n";
}

struct StubServer::Impl {
  StubScript script;
  std::string path;
  httplib::Server server;
  std::thread worker;
  int port = 0;

  std::atomic<long> requests{0};
  std::atomic<int> failures_left{0};
  mutable std::mutex mutex;
  std::string last_body;
  std::string last_auth;

  Impl(StubScript s, std::string p) : script(std::move(s)), path(std::move(p)) {
    failures_left = script.fail_requests;

    server.Post(path, [this](const httplib::Request& req, httplib::Response& res) {
      requests.fetch_add(1);
      {
        std::lock_guard lock(mutex);
        last_body = req.body;
        last_auth = req.get_header_value("Authorization");
      }

      if (failures_left.fetch_sub(1) > 0) {
        res.status = 500;
        res.set_content("scripted failure", "text/plain");
        return;
      }
      failures_left.store(0);

      std::string content;
      try {
        const json body = json::parse(req.body);
        for (const auto& message : body.at("messages")) {
          if (message.value("role", "") == "user") content = message.value("content", "");
        }
      } catch (const json::exception&) {
        res.status = 400;
        res.set_content("malformed request body", "text/plain");
        return;
      }

      std::string reply = script.default_reply;
      for (const auto& rule : script.rules) {
        if (rule_matches(rule, content)) {
          reply = rule.reply;
          break;
        }
      }

      json out;
      out["id"] = "stub-reply";
      out["object"] = "chat.completion";
      out["model"] = "stub";
      out["choices"] = json::array({json{
          {"index", 0},
          {"message", json{{"role", "assistant"}, {"content", reply}}},
          {"finish_reason", "stop"},
      }});
      res.set_content(out.dump(), "application/json");
    });
  }
};

StubServer::StubServer(StubScript script, std::string path)
    : impl_(std::make_unique<Impl>(std::move(script), std::move(path))) {}

StubServer::~StubServer() { stop(); }

int StubServer::start(int port) {
  auto& impl = *impl_;
  if (port == 0) {
    impl.port = impl.server.bind_to_any_port("127.0.0.1");
  } else {
    if (!impl.server.bind_to_port("127.0.0.1", port))
      throw TransportError("stub server: cannot bind port " + std::to_string(port));
    impl.port = port;
  }
  impl.worker = std::thread([&impl] { impl.server.listen_after_bind(); });
  impl.server.wait_until_ready();
  return impl.port;
}

void StubServer::stop() {
  auto& impl = *impl_;
  if (impl.worker.joinable()) {
    impl.server.stop();
    impl.worker.join();
  }
}

int StubServer::port() const { return impl_->port; }

std::string StubServer::base_url() const {
  return "http://127.0.0.1:" + std::to_string(impl_->port);
}

const std::string& StubServer::path() const { return impl_->path; }

long StubServer::request_count() const { return impl_->requests.load(); }

std::string StubServer::last_request_body() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->last_body;
}

std::string StubServer::last_auth_header() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->last_auth;
}

}  // namespace gradeprobe
