#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "gradeprobe/errors.hpp"

namespace gradeprobe {

/// Binary grade. Serializes to 1 (Correct) / 0 (Incorrect) in data files.
enum class GradeLabel { Incorrect = 0, Correct = 1 };

constexpr GradeLabel flip(GradeLabel label) {
  return label == GradeLabel::Correct ? GradeLabel::Incorrect : GradeLabel::Correct;
}

constexpr int label_to_int(GradeLabel label) {
  return label == GradeLabel::Correct ? 1 : 0;
}

inline GradeLabel label_from_int(int value) {
  if (value == 1) return GradeLabel::Correct;
  if (value == 0) return GradeLabel::Incorrect;
  throw DomainError("invalid label value " + std::to_string(value));
}

inline std::string_view label_name(GradeLabel label) {
  return label == GradeLabel::Correct ? "Correct" : "Incorrect";
}

/// Name of an optional label, "Unparseable" when absent.
inline std::string_view label_name(const std::optional<GradeLabel>& label) {
  return label ? label_name(*label) : std::string_view("Unparseable");
}

inline std::optional<GradeLabel> label_from_name(std::string_view name) {
  if (name == "Correct") return GradeLabel::Correct;
  if (name == "Incorrect") return GradeLabel::Incorrect;
  return std::nullopt;
}

}  // namespace gradeprobe
