#pragma once

#include <span>
#include <string>

#include "gradeprobe/harness.hpp"

namespace gradeprobe {

enum class ReportFormat { Json, Markdown };

std::optional<ReportFormat> report_format_from_name(std::string_view name);
std::string_view report_format_extension(ReportFormat format);

/// Serializes one evaluation report. The JSON form is schema-stable,
/// machine-round-trippable and byte-deterministic for equal reports; the
/// markdown form is one table row per configuration with columns
/// CAS, ASR, A_before, A_after, ratio.
std::string emit_report(const EvalReport& report, ReportFormat format);

/// Several configurations as one markdown table (placement sweeps, scope
/// comparisons). include_average appends an unweighted mean row.
std::string emit_reports_markdown(std::span<const EvalReport> reports,
                                  bool include_average = false);

/// Unweighted column means over a set of reports.
struct ReportAverages {
  double cas = 0.0;
  double asr = 0.0;
  double a_before = 0.0;
  double a_after = 0.0;
  double ratio = 0.0;
  std::size_t count = 0;
};

ReportAverages average_reports(std::span<const EvalReport> reports);

/// Several configurations as a JSON array.
std::string emit_reports_json(std::span<const EvalReport> reports);

/// Scope comparison: {"incorrect_only": ..., "bidirectional": ...}.
std::string emit_scope_comparison_json(const EvalReport& incorrect_only,
                                       const EvalReport& bidirectional);

/// Inverse of the JSON emitter; parses back to an equal report.
EvalReport report_from_json(const std::string& text);

/// Baseline-only report (the grade subcommand).
std::string emit_baseline_report(const BaselineReport& baseline, const Dataset& dataset,
                                 const std::string& grader_name, ReportFormat format);

/// Shortest round-trip decimal rendering used by both emitters.
std::string format_double(double value);

}  // namespace gradeprobe
