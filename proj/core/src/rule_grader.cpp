#include "gradeprobe/rule_grader.hpp"

#include <cctype>

namespace gradeprobe {

namespace {

/// Field value: text after the marker up to the next blank line or end.
std::optional<std::string> extract_field(const std::string& text, const std::string& marker) {
  const auto pos = text.find(marker);
  if (pos == std::string::npos) return std::nullopt;
  const auto start = pos + marker.size();
  auto end = text.find("\n\n", start);
  if (end == std::string::npos) end = text.size();
  return text.substr(start, end - start);
}

}  // namespace

std::string normalize_answer_text(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

RuleGrader::RuleGrader(RuleGraderConfig config) : config_(std::move(config)) {}

GradeOutcome RuleGrader::grade(const std::string& prompt_text) const {
  GradeOutcome outcome;

  // The solution field ends where the answer marker begins when both sit in
  // the same block.
  auto solution = extract_field(prompt_text, config_.solution_marker);
  const auto answer = extract_field(prompt_text, config_.answer_marker);
  if (solution) {
    const auto cut = solution->find(config_.answer_marker);
    if (cut != std::string::npos) solution->resize(cut);
  }

  if (!solution || !answer) {
    outcome.error = "prompt is missing the solution or student-answer field";
    return outcome;
  }

  const bool match = normalize_answer_text(*solution) == normalize_answer_text(*answer);
  outcome.label = match ? GradeLabel::Correct : GradeLabel::Incorrect;
  outcome.raw_text = std::string("Result: ") + std::string(label_name(*outcome.label));
  return outcome;
}

}  // namespace gradeprobe
