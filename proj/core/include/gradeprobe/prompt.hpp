#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gradeprobe/dataset.hpp"
#include "gradeprobe/vocabulary.hpp"

namespace gradeprobe {

/// Byte range [offset, offset + length) inside a prompt text.
struct Span {
  std::size_t offset = 0;
  std::size_t length = 0;

  std::size_t end() const { return offset + length; }
  bool operator==(const Span&) const = default;
};

/// Grading prompt template with named slots {question}, {solution} and
/// {student_answer}, each required exactly once. The trailer must instruct a
/// verdict using the words "Correct"/"Incorrect".
class PromptTemplate {
public:
  static PromptTemplate from_string(std::string body, std::string name = "inline");
  static PromptTemplate from_file(const std::filesystem::path& path);

  /// Built-in template: step-by-step verification with a final
  /// "Result: Correct" / "Result: Incorrect" line.
  static const PromptTemplate& default_template();

  const std::string& body() const { return body_; }
  const std::string& name() const { return name_; }

private:
  std::string body_;
  std::string name_;
};

/// Rendered grading prompt with the byte ranges of the three filled slots.
struct GradingPrompt {
  std::string text;
  Span question_span;
  Span solution_span;
  Span answer_span;

  bool operator==(const GradingPrompt&) const = default;
};

/// Fills the template slots with the interaction fields. Rendering is
/// single-pass: slot markers occurring inside the data are kept verbatim.
GradingPrompt render_grading_prompt(const Interaction& item, const PromptTemplate& tmpl);

/// Placement of a role-play string relative to the student answer (S) or
/// the whole prompt (P); R marks the inserted string.
enum class PlacementVariant { RS, RSR, SR, RP, PR, RPR };

std::string_view placement_code(PlacementVariant variant);
std::optional<PlacementVariant> placement_from_code(std::string_view code);

/// The six placement variants, in fixed order:
/// R-S, R-S-R, S-R, R-P, P-R, R-P-R.
const std::array<PlacementVariant, 6>& enumerate_placements();

/// Default role-play instruction inserted by the prompt-level attack.
const std::string& default_role_string();

/// A decoded token suffix was appended after a single-space separator.
struct SuffixDerivation {
  TokenSeq suffix;

  bool operator==(const SuffixDerivation&) const = default;
};

/// One spliced insertion, positioned by its byte offset in the origin text.
struct Insertion {
  std::size_t origin_offset = 0;
  std::string text;

  bool operator==(const Insertion&) const = default;
};

/// A role-play string was inserted at the placement-dictated positions.
struct PlacementDerivation {
  PlacementVariant variant = PlacementVariant::PR;
  std::string role_string;
  std::vector<Insertion> insertions;  // sorted by origin_offset

  bool operator==(const PlacementDerivation&) const = default;
};

/// Grading prompt after an adversarial transformation, together with how it
/// was derived from its origin.
struct AdversarialPrompt {
  std::string text;
  GradingPrompt origin;
  std::variant<SuffixDerivation, PlacementDerivation> derivation;

  bool operator==(const AdversarialPrompt&) const = default;
};

/// Appends the decoded suffix after a single space. An empty suffix leaves
/// the text unchanged. Throws DomainError when the suffix indexes outside
/// the vocabulary.
AdversarialPrompt append_suffix(const GradingPrompt& prompt, const TokenSeq& suffix,
                                const Vocabulary& vocab);

/// Inserts the role string at the variant's positions: a leading R goes on
/// its own line before the anchor, a trailing R after it. S-anchored codes
/// use the student-answer span, P-anchored codes the whole prompt.
AdversarialPrompt apply_role_play(const GradingPrompt& prompt, PlacementVariant variant,
                                  const std::string& role_string = default_role_string());

/// Strips the recorded insertions back out of the adversarial text. For
/// every placement derivation this recovers origin.text exactly.
std::string recovered_origin(const AdversarialPrompt& prompt);

}  // namespace gradeprobe
