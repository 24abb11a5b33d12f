#pragma once

#include <atomic>
#include <random>
#include <string>
#include <vector>

#include "gradeprobe/errors.hpp"
#include "gradeprobe/grader.hpp"
#include "gradeprobe/surrogate.hpp"

namespace gradeprobe::testing {

/// Local scripted black-box grader: first matching rule wins, else the
/// default reply; the reply goes through parse_grade like a real response.
class ScriptedGrader final : public GradingModel {
public:
  struct Rule {
    std::string contains;
    std::string ends_with;
    std::string reply;
  };

  ScriptedGrader(std::vector<Rule> rules, std::string default_reply)
      : rules_(std::move(rules)), default_reply_(std::move(default_reply)) {}

  Capability capability() const override { return Capability::BlackBox; }
  std::string name() const override { return "scripted"; }

  GradeOutcome grade(const std::string& prompt_text) const override {
    std::string reply = default_reply_;
    for (const auto& rule : rules_) {
      if (!rule.contains.empty() && prompt_text.find(rule.contains) != std::string::npos) {
        reply = rule.reply;
        break;
      }
      if (!rule.ends_with.empty()) {
        std::string trimmed = prompt_text;
        while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back())))
          trimmed.pop_back();
        if (trimmed.size() >= rule.ends_with.size() &&
            trimmed.compare(trimmed.size() - rule.ends_with.size(), rule.ends_with.size(),
                            rule.ends_with) == 0) {
          reply = rule.reply;
          break;
        }
      }
    }
    GradeOutcome outcome;
    outcome.raw_text = reply;
    outcome.label = parse_grade(reply);
    return outcome;
  }

private:
  std::vector<Rule> rules_;
  std::string default_reply_;
};

/// Grader scripted to reply Correct only when the prompt's last line is the
/// given marker.
inline ScriptedGrader end_sensitive_grader(const std::string& marker) {
  return ScriptedGrader({{.contains = "", .ends_with = marker, .reply = "Result: Correct"}},
                        "Result: Incorrect");
}

/// Black-box grader whose every call fails at the transport level.
class FailingGrader final : public GradingModel {
public:
  Capability capability() const override { return Capability::BlackBox; }
  std::string name() const override { return "failing"; }
  GradeOutcome grade(const std::string&) const override {
    throw TransportError("scripted transport failure");
  }
};

/// Forwarding decorator that counts every call.
class CountingGrader final : public GradingModel {
public:
  explicit CountingGrader(const GradingModel& inner) : inner_(inner) {}

  Capability capability() const override { return inner_.capability(); }
  std::string name() const override { return inner_.name(); }

  GradeOutcome grade(const std::string& text) const override {
    ++grades;
    return inner_.grade(text);
  }
  double loss(const std::string& text, GradeLabel target) const override {
    ++losses;
    return inner_.loss(text, target);
  }
  double suffix_loss(const std::string& base, const TokenSeq& suffix,
                     GradeLabel target) const override {
    ++losses;
    return inner_.suffix_loss(base, suffix, target);
  }
  GradientMatrix suffix_gradient(const std::string& base, const TokenSeq& suffix,
                                 GradeLabel target) const override {
    ++gradients;
    return inner_.suffix_gradient(base, suffix, target);
  }
  const Vocabulary& vocab() const override { return inner_.vocab(); }

  mutable std::atomic<long> grades{0};
  mutable std::atomic<long> losses{0};
  mutable std::atomic<long> gradients{0};

private:
  const GradingModel& inner_;
};

/// Small vocabulary of the given words plus "!" and an OOV bucket.
inline Vocabulary small_vocab(std::vector<std::string> extra_words) {
  std::vector<std::string> tokens = {"!", "unk"};
  for (auto& word : extra_words) tokens.push_back(std::move(word));
  return Vocabulary::from_tokens(std::move(tokens), 1);
}

/// Independent relaxed-one-hot forward pass over the surrogate's raw
/// parameters: selection[i][v] is the weight of token v at suffix slot i.
/// Recomputes pooled embedding, logit and loss from embedding/head/bias
/// accessors without touching the grader's own loss path.
inline double relaxed_loss(const SurrogateGrader& grader,
                           const std::vector<std::int32_t>& base_ids,
                           const std::vector<std::vector<double>>& selection,
                           GradeLabel target) {
  const auto head = grader.head_weights();
  const std::size_t d = head.size();
  std::vector<double> pooled(d, 0.0);

  for (auto id : base_ids) {
    const auto e = grader.embedding(static_cast<std::size_t>(id));
    for (std::size_t k = 0; k < d; ++k) pooled[k] += e[k];
  }
  for (const auto& row : selection) {
    for (std::size_t v = 0; v < row.size(); ++v) {
      if (row[v] == 0.0) continue;
      const auto e = grader.embedding(v);
      for (std::size_t k = 0; k < d; ++k) pooled[k] += row[v] * e[k];
    }
  }

  const double n = static_cast<double>(base_ids.size() + selection.size());
  double logit = grader.bias();
  for (std::size_t k = 0; k < d; ++k) logit += head[k] * pooled[k] / n;

  const double p_correct = 1.0 / (1.0 + std::exp(-logit));
  const double p_target = target == GradeLabel::Correct ? p_correct : 1.0 - p_correct;
  return -std::log(p_target);
}

}  // namespace gradeprobe::testing
