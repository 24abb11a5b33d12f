#include "gradeprobe/grader.hpp"

#include <algorithm>
#include <cctype>

#include "gradeprobe/errors.hpp"

namespace gradeprobe {

namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) != 0 || c == '_'; }

std::string lowercased(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool word_at(const std::string& text, std::size_t pos, std::string_view word) {
  if (text.compare(pos, word.size(), word) != 0) return false;
  if (pos > 0 && is_word_byte(static_cast<unsigned char>(text[pos - 1]))) return false;
  const std::size_t after = pos + word.size();
  if (after < text.size() && is_word_byte(static_cast<unsigned char>(text[after]))) return false;
  return true;
}

/// Verdict word starting at pos, if any.
std::optional<GradeLabel> verdict_at(const std::string& text, std::size_t pos) {
  if (word_at(text, pos, "incorrect")) return GradeLabel::Incorrect;
  if (word_at(text, pos, "correct")) return GradeLabel::Correct;
  return std::nullopt;
}

}  // namespace

std::optional<GradeLabel> parse_grade(std::string_view raw_text) {
  const std::string text = lowercased(raw_text);

  // Rule 1: last "result: <verdict>" marker.
  std::optional<GradeLabel> marker_verdict;
  for (std::size_t pos = text.find("result"); pos != std::string::npos;
       pos = text.find("result", pos + 1)) {
    if (!word_at(text, pos, "result")) continue;
    std::size_t cursor = pos + 6;
    while (cursor < text.size() && (text[cursor] == ' ' || text[cursor] == '\t')) ++cursor;
    if (cursor >= text.size() || text[cursor] != ':') continue;
    ++cursor;
    while (cursor < text.size() && (text[cursor] == ' ' || text[cursor] == '\t')) ++cursor;
    if (auto verdict = verdict_at(text, cursor)) marker_verdict = verdict;
  }
  if (marker_verdict) return marker_verdict;

  // Rule 2: last standalone verdict word.
  std::optional<GradeLabel> word_verdict;
  for (std::size_t pos = 0; pos < text.size(); ++pos) {
    if (auto verdict = verdict_at(text, pos)) {
      word_verdict = verdict;
      pos += (*verdict == GradeLabel::Incorrect ? 9 : 7) - 1;
    }
  }
  return word_verdict;
}

double GradingModel::loss(const std::string&, GradeLabel) const {
  throw CapabilityError("grader \"" + name() + "\" is black-box: loss unavailable");
}

double GradingModel::suffix_loss(const std::string& base_text, const TokenSeq& suffix,
                                 GradeLabel target) const {
  std::string text = base_text;
  if (!suffix.empty()) {
    text += ' ';
    text += vocab().decode_joined(suffix);
  }
  return loss(text, target);
}

GradientMatrix GradingModel::suffix_gradient(const std::string&, const TokenSeq&,
                                             GradeLabel) const {
  throw CapabilityError("grader \"" + name() + "\" is black-box: gradients unavailable");
}

const Vocabulary& GradingModel::vocab() const {
  throw CapabilityError("grader \"" + name() + "\" is black-box: no vocabulary exposed");
}

}  // namespace gradeprobe
