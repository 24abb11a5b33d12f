#include "gradeprobe/report.hpp"

#include <charconv>

#include <nlohmann/json.hpp>

#include "gradeprobe/errors.hpp"

namespace gradeprobe {

using nlohmann::json;

namespace {

json config_to_json(const ReportConfig& config) {
  json out;
  out["grader"] = config.grader;
  out["dataset"] = config.dataset;
  out["method"] = config.method;
  out["scope"] = config.scope;
  out["basis"] = config.basis;
  out["placement"] = config.placement;
  out["role_string"] = config.role_string;
  out["template"] = config.template_name;
  out["suffix_len"] = config.gcg.suffix_len;
  out["max_iters"] = config.gcg.max_iters;
  out["top_k"] = config.gcg.top_k;
  out["batch"] = config.gcg.batch;
  out["seed"] = config.gcg.seed;
  out["init_token"] = config.gcg.init_token;
  out["cas_alpha"] = config.cas.alpha;
  out["cas_beta"] = config.cas.beta;
  out["cas_gamma"] = config.cas.gamma;
  out["cas_cap"] = config.cas.cap;
  out["workers"] = config.workers;
  out["exclude_already_target"] = config.exclude_already_target;
  return out;
}

ReportConfig config_from_json(const json& in) {
  ReportConfig config;
  config.grader = in.value("grader", "");
  config.dataset = in.value("dataset", "");
  config.method = in.value("method", "");
  config.scope = in.value("scope", "");
  config.basis = in.value("basis", "");
  config.placement = in.value("placement", "");
  config.role_string = in.value("role_string", "");
  config.template_name = in.value("template", "");
  config.gcg.suffix_len = in.value("suffix_len", config.gcg.suffix_len);
  config.gcg.max_iters = in.value("max_iters", config.gcg.max_iters);
  config.gcg.top_k = in.value("top_k", config.gcg.top_k);
  config.gcg.batch = in.value("batch", config.gcg.batch);
  config.gcg.seed = in.value("seed", config.gcg.seed);
  config.gcg.init_token = in.value("init_token", config.gcg.init_token);
  config.cas.alpha = in.value("cas_alpha", config.cas.alpha);
  config.cas.beta = in.value("cas_beta", config.cas.beta);
  config.cas.gamma = in.value("cas_gamma", config.cas.gamma);
  config.cas.cap = in.value("cas_cap", config.cas.cap);
  config.workers = in.value("workers", 1);
  config.exclude_already_target = in.value("exclude_already_target", false);
  return config;
}

json record_to_json(const RecordSummary& record) {
  json out;
  out["item_id"] = record.item_id;
  out["method"] = record.method;
  out["target"] = record.target;
  out["pre_label"] = record.pre_label;
  out["post_label"] = record.post_label;
  out["success"] = record.success;
  out["grader_calls"] = record.grader_calls;
  out["loss_evals"] = record.loss_evals;
  out["gradient_evals"] = record.gradient_evals;
  out["iterations"] = record.iterations;
  if (record.initial_loss) out["initial_loss"] = *record.initial_loss;
  if (record.final_loss) out["final_loss"] = *record.final_loss;
  if (!record.final_suffix.empty()) out["final_suffix"] = record.final_suffix;
  if (!record.placements.empty()) {
    json steps = json::array();
    for (const auto& step : record.placements) {
      json entry;
      entry["variant"] = step.variant;
      entry["label"] = step.label;
      if (!step.error.empty()) entry["error"] = step.error;
      steps.push_back(std::move(entry));
    }
    out["placements"] = std::move(steps);
  }
  if (!record.error.empty()) out["error"] = record.error;
  return out;
}

RecordSummary record_from_json(const json& in) {
  RecordSummary record;
  record.item_id = in.value("item_id", "");
  record.method = in.value("method", "");
  record.target = in.value("target", "");
  record.pre_label = in.value("pre_label", "");
  record.post_label = in.value("post_label", "");
  record.success = in.value("success", false);
  record.grader_calls = in.value("grader_calls", 0L);
  record.loss_evals = in.value("loss_evals", 0L);
  record.gradient_evals = in.value("gradient_evals", 0L);
  record.iterations = in.value("iterations", 0);
  if (in.contains("initial_loss")) record.initial_loss = in["initial_loss"].get<double>();
  if (in.contains("final_loss")) record.final_loss = in["final_loss"].get<double>();
  record.final_suffix = in.value("final_suffix", "");
  for (const auto& entry : in.value("placements", json::array())) {
    record.placements.push_back(
        {entry.value("variant", ""), entry.value("label", ""), entry.value("error", "")});
  }
  record.error = in.value("error", "");
  return record;
}

json report_to_json(const EvalReport& report) {
  json out;
  out["config"] = config_to_json(report.config);
  out["dataset_size"] = report.dataset_size;
  out["a_before"] = report.a_before;
  out["a_after"] = report.a_after;
  out["ratio"] = report.ratio;
  out["clamp_fired"] = report.clamp_fired;
  out["asr"] = report.asr;
  out["cas"] = report.cas;
  out["correct_label_delta"] = report.correct_label_delta;
  out["attacked"] = report.attacked_count;
  out["successes"] = report.success_count;
  out["baseline_grader_calls"] = report.baseline_grader_calls;
  out["attack_grader_calls"] = report.attack_grader_calls;
  out["loss_evals"] = report.loss_evals;
  out["gradient_evals"] = report.gradient_evals;
  json records = json::array();
  for (const auto& record : report.records) records.push_back(record_to_json(record));
  out["records"] = std::move(records);
  return out;
}

EvalReport report_from_json_value(const json& in) {
  EvalReport report;
  report.config = config_from_json(in.at("config"));
  report.dataset_size = in.value("dataset_size", std::size_t{0});
  report.a_before = in.value("a_before", 0.0);
  report.a_after = in.value("a_after", 0.0);
  report.ratio = in.value("ratio", 0.0);
  report.clamp_fired = in.value("clamp_fired", false);
  report.asr = in.value("asr", 0.0);
  report.cas = in.value("cas", 0.0);
  report.correct_label_delta = in.value("correct_label_delta", 0.0);
  report.attacked_count = in.value("attacked", std::size_t{0});
  report.success_count = in.value("successes", std::size_t{0});
  report.baseline_grader_calls = in.value("baseline_grader_calls", 0L);
  report.attack_grader_calls = in.value("attack_grader_calls", 0L);
  report.loss_evals = in.value("loss_evals", 0L);
  report.gradient_evals = in.value("gradient_evals", 0L);
  for (const auto& entry : in.value("records", json::array()))
    report.records.push_back(record_from_json(entry));
  return report;
}

std::string config_label(const ReportConfig& config) {
  std::string label = config.grader + " / " + config.dataset + " / " + config.method;
  if (config.method == "role_play" && !config.placement.empty())
    label += "(" + config.placement + ")";
  label += " / " + config.scope;
  return label;
}

void append_markdown_row(std::string& out, const EvalReport& report) {
  out += "| " + config_label(report.config);
  out += " | " + format_double(report.cas);
  out += " | " + format_double(report.asr);
  out += " | " + format_double(report.a_before);
  out += " | " + format_double(report.a_after);
  out += " | " + format_double(report.ratio);
  out += " |\n";
}

constexpr std::string_view kMarkdownHeader =
    "| Config | CAS | ASR | A_before | A_after | Ratio |\n"
    "|---|---|---|---|---|---|\n";

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

std::optional<ReportFormat> report_format_from_name(std::string_view name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "markdown" || name == "md") return ReportFormat::Markdown;
  return std::nullopt;
}

std::string_view report_format_extension(ReportFormat format) {
  return format == ReportFormat::Json ? ".json" : ".md";
}

std::string emit_report(const EvalReport& report, ReportFormat format) {
  if (format == ReportFormat::Json) return report_to_json(report).dump(2) + "\n";
  std::string out(kMarkdownHeader);
  append_markdown_row(out, report);
  return out;
}

std::string emit_reports_markdown(std::span<const EvalReport> reports, bool include_average) {
  std::string out(kMarkdownHeader);
  for (const auto& report : reports) append_markdown_row(out, report);
  if (include_average && !reports.empty()) {
    const auto mean = average_reports(reports);
    out += "| Average | " + format_double(mean.cas) + " | " + format_double(mean.asr) + " | " +
           format_double(mean.a_before) + " | " + format_double(mean.a_after) + " | " +
           format_double(mean.ratio) + " |\n";
  }
  return out;
}

ReportAverages average_reports(std::span<const EvalReport> reports) {
  if (reports.empty()) throw DomainError("average_reports: no reports");
  ReportAverages mean;
  for (const auto& report : reports) {
    mean.cas += report.cas;
    mean.asr += report.asr;
    mean.a_before += report.a_before;
    mean.a_after += report.a_after;
    mean.ratio += report.ratio;
  }
  const double n = static_cast<double>(reports.size());
  mean.cas /= n;
  mean.asr /= n;
  mean.a_before /= n;
  mean.a_after /= n;
  mean.ratio /= n;
  mean.count = reports.size();
  return mean;
}

std::string emit_reports_json(std::span<const EvalReport> reports) {
  json out = json::array();
  for (const auto& report : reports) out.push_back(report_to_json(report));
  return out.dump(2) + "\n";
}

std::string emit_scope_comparison_json(const EvalReport& incorrect_only,
                                       const EvalReport& bidirectional) {
  json out;
  out["incorrect_only"] = report_to_json(incorrect_only);
  out["bidirectional"] = report_to_json(bidirectional);
  return out.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  try {
    return report_from_json_value(json::parse(text));
  } catch (const json::exception& e) {
    throw LoadError(std::string("invalid report json: ") + e.what());
  }
}

std::string emit_baseline_report(const BaselineReport& baseline, const Dataset& dataset,
                                 const std::string& grader_name, ReportFormat format) {
  if (format == ReportFormat::Json) {
    json out;
    out["grader"] = grader_name;
    out["dataset"] = dataset.name;
    out["items"] = dataset.size();
    out["accuracy"] = baseline.accuracy;
    out["correct_fraction"] = baseline.correct_fraction;
    out["grader_calls"] = baseline.grader_calls;
    json grades = json::array();
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      json entry;
      entry["id"] = dataset.items[i].id;
      entry["truth"] = std::string(label_name(dataset.items[i].label));
      entry["model"] = std::string(label_name(baseline.outcomes[i].label));
      grades.push_back(std::move(entry));
    }
    out["grades"] = std::move(grades);
    return out.dump(2) + "\n";
  }

  std::string out =
      "| Grader | Dataset | Items | Accuracy | Correct fraction |\n"
      "|---|---|---|---|---|\n";
  out += "| " + grader_name + " | " + dataset.name + " | " + std::to_string(dataset.size()) +
         " | " + format_double(baseline.accuracy) + " | " +
         format_double(baseline.correct_fraction) + " |\n";
  return out;
}

}  // namespace gradeprobe
