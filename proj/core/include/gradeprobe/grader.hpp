#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gradeprobe/labels.hpp"
#include "gradeprobe/vocabulary.hpp"

namespace gradeprobe {

enum class Capability { BlackBox, WhiteBox };

/// A grader's verdict on one prompt. An absent label means the response
/// matched no parse rule (unparseable); `error` carries a transport or
/// endpoint annotation when grading itself failed.
struct GradeOutcome {
  std::optional<GradeLabel> label;
  std::string raw_text;
  std::optional<double> score;  // white-box probability of Correct
  std::string error;

  bool operator==(const GradeOutcome&) const = default;
};

/// Extracts the verdict from a model response. Precedence: the last
/// "Result: Correct|Incorrect" marker, else the last standalone
/// "correct"/"incorrect" word (case-insensitive; the "correct" inside
/// "incorrect" never counts). Returns nullopt when neither rule fires.
std::optional<GradeLabel> parse_grade(std::string_view raw_text);

/// Row-major |rows| x |cols| matrix of loss derivatives.
struct GradientMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
};

/// Grading model contract. Black-box graders answer grade() only; white-box
/// graders additionally expose the target loss, its gradient with respect to
/// suffix token choices, and their vocabulary. The white-box entry points
/// refuse with CapabilityError unless overridden.
class GradingModel {
public:
  virtual ~GradingModel() = default;

  virtual Capability capability() const = 0;
  virtual std::string name() const = 0;

  /// Grades one rendered prompt. Deterministic for a fixed configuration.
  virtual GradeOutcome grade(const std::string& prompt_text) const = 0;

  /// -log p(target | response distribution) for the full prompt text.
  virtual double loss(const std::string& prompt_text, GradeLabel target) const;

  /// Loss of base text with a decoded token suffix appended.
  virtual double suffix_loss(const std::string& base_text, const TokenSeq& suffix,
                             GradeLabel target) const;

  /// |suffix| x |V| matrix: entry (i, v) is the loss derivative with respect
  /// to selecting token v at suffix position i (one-hot relaxation).
  virtual GradientMatrix suffix_gradient(const std::string& base_text, const TokenSeq& suffix,
                                         GradeLabel target) const;

  /// Vocabulary the white-box gradient indexes into.
  virtual const Vocabulary& vocab() const;
};

}  // namespace gradeprobe
