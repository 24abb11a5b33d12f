#pragma once

#include <string>

#include "gradeprobe/grader.hpp"

namespace gradeprobe {

struct RuleGraderConfig {
  std::string solution_marker = "Solution:";
  std::string answer_marker = "Student answer:";
};

/// Deterministic black-box grader: extracts the solution and student answer
/// from the prompt by their field markers and grades Correct iff the two
/// normalize to the same string (lowercase, collapsed whitespace). Prompts
/// missing either marker come back unparseable. Serves as a robust grading
/// oracle that prompt-level attacks should not move.
class RuleGrader final : public GradingModel {
public:
  explicit RuleGrader(RuleGraderConfig config = {});

  Capability capability() const override { return Capability::BlackBox; }
  std::string name() const override { return "rule"; }
  GradeOutcome grade(const std::string& prompt_text) const override;

private:
  RuleGraderConfig config_;
};

/// Whitespace-collapsing lowercase normalization used by RuleGrader.
std::string normalize_answer_text(std::string_view text);

}  // namespace gradeprobe
