#pragma once

#include <filesystem>

#include "gradeprobe/dataset.hpp"
#include "gradeprobe/prompt.hpp"
#include "gradeprobe/stub_server.hpp"
#include "gradeprobe/surrogate.hpp"
#include "gradeprobe/vocabulary.hpp"

namespace gradeprobe::fixtures {

/// 512-token vocabulary backing the planted surrogate: "!", the OOV bucket,
/// two vulnerable tokens (amplify +25 / suppress -25), two rule keywords
/// (consistent +6 / contradicts -6) and neutral filler words.
Vocabulary planted_vocab();

/// Planted construction parameters: dims 16, seed 42, bias 0.
SurrogateSpec planted_spec();

/// The default planted surrogate grader.
SurrogateGrader planted_grader();

/// 50 synthetic interactions whose answers carry three rule-keyword
/// occurrences each (|pooled-sum| = 18), so a single vulnerable token in a
/// suffix flips any item. The surrogate agrees with ground truth on 40 of
/// 50 items (baseline accuracy 0.8).
Dataset planted_dataset();

/// 20 interactions arranged so a bidirectional attack flips equal numbers
/// of correctly and incorrectly graded items (accuracy ratio 1) while the
/// incorrect-only scope flips one way. "Strong" items carry 95 keyword
/// occurrences and sit beyond the reach of a 20-token suffix.
Dataset scope_dataset();

/// 12 interactions graded perfectly by RuleGrader: half the student
/// answers normalize to the solution, half do not.
Dataset demo_dataset();

/// Stub script that answers "Result: Correct" only when the request prompt
/// ends with the role string, "Result: Incorrect" otherwise.
StubScript end_sensitive_stub_script(const std::string& role_string = default_role_string());

/// Writes the bundled fixture files (datasets/, templates/, stubs/) under
/// the given directory.
void write_bundled_files(const std::filesystem::path& dir);

}  // namespace gradeprobe::fixtures
