#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gradeprobe/dataset.hpp"
#include "gradeprobe/grader.hpp"
#include "gradeprobe/prompt.hpp"

namespace gradeprobe {

enum class AttackMethodKind { Gcg, RolePlay };

std::string_view method_name(AttackMethodKind kind);
std::optional<AttackMethodKind> method_from_name(std::string_view name);

/// Token-level suffix attack configuration.
struct GcgConfig {
  std::size_t suffix_len = 20;
  int max_iters = 500;
  std::size_t top_k = 64;   // gradient-ranked candidate tokens kept per position
  std::size_t batch = 64;   // single-position substitutions evaluated per iteration
  std::uint64_t seed = 42;
  std::string init_token = "!";

  /// Throws ConfigError on invalid values, including top_k > |V| and an
  /// init token missing from the vocabulary.
  void validate(const Vocabulary& vocab) const;

  bool operator==(const GcgConfig&) const = default;
};

struct GcgTracePoint {
  double loss = 0.0;
  TokenSeq suffix;

  bool operator==(const GcgTracePoint&) const = default;
};

struct PlacementTracePoint {
  PlacementVariant variant = PlacementVariant::PR;
  std::optional<GradeLabel> label;
  std::string error;

  bool operator==(const PlacementTracePoint&) const = default;
};

/// One attack attempt against one interaction.
struct AttackRecord {
  std::string item_id;
  AttackMethodKind method = AttackMethodKind::Gcg;
  GradeLabel target = GradeLabel::Correct;
  std::optional<GradeLabel> pre_attack_label;
  AdversarialPrompt final_prompt;
  GradeOutcome outcome;
  bool success = false;  // always outcome.label == target

  std::vector<GcgTracePoint> gcg_trace;           // per-iteration incumbent
  std::vector<PlacementTracePoint> placement_trace;

  long grader_calls = 0;    // black-box grade() invocations
  long loss_evals = 0;      // white-box loss evaluations
  long gradient_evals = 0;  // white-box gradient evaluations
  int iterations = 0;
};

/// Fraction of records whose post-attack label hit the target.
double compute_asr(std::span<const AttackRecord> records);

/// Mutable state of one suffix optimization: the incumbent suffix, its loss
/// once evaluated, and the seeded RNG driving candidate sampling.
struct GcgState {
  std::string base_text;
  TokenSeq suffix;
  double incumbent_loss = std::numeric_limits<double>::quiet_NaN();
  std::mt19937_64 rng;
  long loss_evals = 0;
  long gradient_evals = 0;
};

/// Initial state: a suffix of cfg.suffix_len copies of cfg.init_token.
GcgState make_gcg_state(const GradingPrompt& prompt, const GradingModel& grader,
                        const GcgConfig& cfg);

/// One optimization iteration: evaluates the incumbent, takes the suffix
/// gradient, keeps the top_k lowest-gradient tokens per position, samples
/// cfg.batch single-position substitutions uniformly without replacement
/// from that grid, and adopts the strictly best candidate. The incumbent is
/// always in the evaluated set, so the returned loss never increases.
double gcg_step(GcgState& state, const GradingModel& grader, GradeLabel target,
                const GcgConfig& cfg);

/// Full token-level attack on one item. Stops early once the grade reaches
/// the target or after cfg.max_iters iterations. When the caller already
/// knows the clean-prompt grade it can pass it to save one grader call.
AttackRecord gcg_attack(const Interaction& item, const GradingModel& grader, GradeLabel target,
                        const GcgConfig& cfg, const PromptTemplate& tmpl,
                        std::optional<GradeLabel> known_pre_label = std::nullopt);

/// Prompt-level attack: render, place the role string, grade once. Transport
/// failures from remote graders land in the record (unparseable outcome with
/// the error annotation), they do not propagate.
AttackRecord role_play_attack(const Interaction& item, const GradingModel& grader,
                              GradeLabel target, PlacementVariant variant,
                              const std::string& role_string, const PromptTemplate& tmpl,
                              std::optional<GradeLabel> known_pre_label = std::nullopt);

/// Ordered placement search: returns on the first successful variant, else
/// the final variant's record with the full per-variant trace. For a binary
/// grade any success is maximal, so first-success realizes the argmax over
/// the placement space.
AttackRecord optimize_prompt_attack(const Interaction& item, const GradingModel& grader,
                                    GradeLabel target,
                                    std::span<const PlacementVariant> variants,
                                    const std::string& role_string, const PromptTemplate& tmpl,
                                    std::optional<GradeLabel> known_pre_label = std::nullopt);

}  // namespace gradeprobe
