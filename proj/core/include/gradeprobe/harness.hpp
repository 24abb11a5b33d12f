#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gradeprobe/attacks.hpp"
#include "gradeprobe/dataset.hpp"
#include "gradeprobe/grader.hpp"
#include "gradeprobe/metrics.hpp"
#include "gradeprobe/prompt.hpp"

namespace gradeprobe {

enum class ScopeMode { IncorrectOnly, Bidirectional };
enum class SelectionBasis { ModelLabel, GroundTruth };

std::string_view scope_mode_name(ScopeMode mode);
std::optional<ScopeMode> scope_mode_from_name(std::string_view name);
std::string_view basis_name(SelectionBasis basis);
std::optional<SelectionBasis> basis_from_name(std::string_view name);

/// Which items are attacked and toward which target. IncorrectOnly attacks
/// items whose basis-label is Incorrect with target Correct; Bidirectional
/// attacks every item toward the flip of its basis-label.
struct ScopePolicy {
  ScopeMode mode = ScopeMode::IncorrectOnly;
  SelectionBasis basis = SelectionBasis::ModelLabel;
  /// Skip items whose pre-attack model label already equals the target
  /// (only possible under the GroundTruth basis).
  bool exclude_already_target = false;
};

/// Grades of the unattacked dataset, one outcome per item in order.
struct BaselineReport {
  std::vector<GradeOutcome> outcomes;
  double accuracy = 0.0;
  double correct_fraction = 0.0;
  long grader_calls = 0;
};

/// Grades every item once with the plain grading prompt. Unparseable
/// outcomes count as mismatches. Transport errors abort (the remote client
/// has already retried per item).
BaselineReport baseline_grade(const Dataset& dataset, const GradingModel& grader,
                              const PromptTemplate& tmpl, int workers = 1);

struct AttackTask {
  std::size_t item_index = 0;
  GradeLabel target = GradeLabel::Correct;
  std::optional<GradeLabel> pre_label;
};

/// Applies the scope policy to the baseline. Items with an unparseable
/// baseline grade are skipped under the ModelLabel basis.
std::vector<AttackTask> select_targets(const BaselineReport& baseline, const Dataset& dataset,
                                       const ScopePolicy& scope);

/// Attack configuration shared by the batch runner.
struct AttackMethod {
  AttackMethodKind kind = AttackMethodKind::Gcg;
  GcgConfig gcg;
  /// Role-play placement; nullopt searches all six variants in order.
  std::optional<PlacementVariant> placement;
  std::string role_string = default_role_string();
};

/// Executes the chosen attack per task, preserving task order in the
/// output. Capability and configuration errors surface before any attack
/// runs. Per-task GCG seeds derive as cfg.seed + task index, so the
/// aggregate is deterministic for a fixed seed at any worker count.
std::vector<AttackRecord> run_attacks(const Dataset& dataset, std::span<const AttackTask> tasks,
                                      const AttackMethod& method, const GradingModel& grader,
                                      const PromptTemplate& tmpl, int workers = 1);

/// Configuration echo carried by every evaluation report.
struct ReportConfig {
  std::string grader;
  std::string dataset;
  std::string method;
  std::string scope;
  std::string basis;
  std::string placement;  // variant code, or "search" for the ordered search
  std::string role_string;
  std::string template_name;
  GcgConfig gcg;
  CasParams cas;
  int workers = 1;
  bool exclude_already_target = false;

  bool operator==(const ReportConfig&) const = default;
};

struct PlacementStep {
  std::string variant;
  std::string label;
  std::string error;

  bool operator==(const PlacementStep&) const = default;
};

/// Compact attack-record view embedded in reports.
struct RecordSummary {
  std::string item_id;
  std::string method;
  std::string target;
  std::string pre_label;
  std::string post_label;
  bool success = false;
  long grader_calls = 0;
  long loss_evals = 0;
  long gradient_evals = 0;
  int iterations = 0;
  std::optional<double> initial_loss;
  std::optional<double> final_loss;
  std::string final_suffix;  // decoded suffix text, token-level attacks only
  std::vector<PlacementStep> placements;
  std::string error;

  bool operator==(const RecordSummary&) const = default;
};

/// Aggregate evaluation of one (grader, dataset, method, scope) run.
struct EvalReport {
  ReportConfig config;
  std::size_t dataset_size = 0;
  double a_before = 0.0;
  double a_after = 0.0;
  double ratio = 0.0;
  bool clamp_fired = false;
  double asr = 0.0;
  double cas = 0.0;
  double correct_label_delta = 0.0;
  std::size_t attacked_count = 0;
  std::size_t success_count = 0;
  long baseline_grader_calls = 0;
  long attack_grader_calls = 0;
  long loss_evals = 0;
  long gradient_evals = 0;
  std::vector<RecordSummary> records;

  bool operator==(const EvalReport&) const = default;
};

/// Recomputes accuracy over the full dataset with attacked items graded by
/// their final adversarial outcome and unattacked items keeping their
/// baseline grade, then derives ratio, ASR, CAS and the correct-label
/// delta. With no records the report carries ratio 1 and zero ASR/CAS.
/// Throws DomainError when a record's item id is not in the dataset, on
/// duplicate record ids, or when a_before is 0.
EvalReport camouflage_eval(const BaselineReport& baseline, std::span<const AttackRecord> records,
                           const Dataset& dataset, const CasParams& cas_params = {});

struct PipelineConfig {
  ScopePolicy scope;
  AttackMethod method;
  CasParams cas;
  int workers = 1;
};

/// baseline -> select -> attack -> camouflage_eval, with the config echo
/// filled in.
EvalReport run_pipeline(const Dataset& dataset, const GradingModel& grader,
                        const PromptTemplate& tmpl, const PipelineConfig& config);

/// Same, reusing an existing baseline (shared-baseline comparisons).
EvalReport run_pipeline_with_baseline(const BaselineReport& baseline, const Dataset& dataset,
                                      const GradingModel& grader, const PromptTemplate& tmpl,
                                      const PipelineConfig& config);

}  // namespace gradeprobe
