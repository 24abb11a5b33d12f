#include "gradeprobe/harness.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "gradeprobe/errors.hpp"

namespace gradeprobe {

std::string_view scope_mode_name(ScopeMode mode) {
  return mode == ScopeMode::IncorrectOnly ? "incorrect-only" : "bidirectional";
}

std::optional<ScopeMode> scope_mode_from_name(std::string_view name) {
  if (name == "incorrect-only") return ScopeMode::IncorrectOnly;
  if (name == "bidirectional") return ScopeMode::Bidirectional;
  return std::nullopt;
}

std::string_view basis_name(SelectionBasis basis) {
  return basis == SelectionBasis::ModelLabel ? "model" : "truth";
}

std::optional<SelectionBasis> basis_from_name(std::string_view name) {
  if (name == "model") return SelectionBasis::ModelLabel;
  if (name == "truth") return SelectionBasis::GroundTruth;
  return std::nullopt;
}

namespace {

/// Runs fn(i) for i in [0, count) on up to `workers` threads. The first
/// exception is rethrown after all threads join.
template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(count);  // drain remaining work
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  const std::size_t thread_count = std::min<std::size_t>(static_cast<std::size_t>(workers), count);
  pool.reserve(thread_count);
  for (std::size_t t = 0; t < thread_count; ++t) pool.emplace_back(body);
  for (auto& thread : pool) thread.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::string suffix_text_of(const AttackRecord& record) {
  if (!std::holds_alternative<SuffixDerivation>(record.final_prompt.derivation)) return {};
  const auto& origin = record.final_prompt.origin.text;
  const auto& text = record.final_prompt.text;
  if (text.size() <= origin.size() + 1) return {};
  return text.substr(origin.size() + 1);  // skip the separator space
}

RecordSummary summarize(const AttackRecord& record) {
  RecordSummary summary;
  summary.item_id = record.item_id;
  summary.method = std::string(method_name(record.method));
  summary.target = std::string(label_name(record.target));
  summary.pre_label = std::string(label_name(record.pre_attack_label));
  summary.post_label = std::string(label_name(record.outcome.label));
  summary.success = record.success;
  summary.grader_calls = record.grader_calls;
  summary.loss_evals = record.loss_evals;
  summary.gradient_evals = record.gradient_evals;
  summary.iterations = record.iterations;
  if (!record.gcg_trace.empty()) {
    summary.initial_loss = record.gcg_trace.front().loss;
    summary.final_loss = record.gcg_trace.back().loss;
  }
  summary.final_suffix = suffix_text_of(record);
  for (const auto& step : record.placement_trace) {
    summary.placements.push_back({std::string(placement_code(step.variant)),
                                  std::string(label_name(step.label)), step.error});
  }
  summary.error = record.outcome.error;
  return summary;
}

}  // namespace

BaselineReport baseline_grade(const Dataset& dataset, const GradingModel& grader,
                              const PromptTemplate& tmpl, int workers) {
  if (dataset.items.empty()) throw DomainError("baseline_grade: empty dataset");

  BaselineReport report;
  report.outcomes.resize(dataset.size());
  parallel_for(dataset.size(), workers, [&](std::size_t i) {
    report.outcomes[i] = grader.grade(render_grading_prompt(dataset.items[i], tmpl).text);
  });
  report.grader_calls = static_cast<long>(dataset.size());

  std::vector<std::optional<GradeLabel>> model_labels;
  std::vector<GradeLabel> truth;
  model_labels.reserve(dataset.size());
  truth.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    model_labels.push_back(report.outcomes[i].label);
    truth.push_back(dataset.items[i].label);
  }
  report.accuracy = compute_accuracy(model_labels, truth);
  report.correct_fraction = correct_fraction(std::span<const std::optional<GradeLabel>>(
      model_labels.data(), model_labels.size()));
  return report;
}

std::vector<AttackTask> select_targets(const BaselineReport& baseline, const Dataset& dataset,
                                       const ScopePolicy& scope) {
  if (baseline.outcomes.size() != dataset.size())
    throw DomainError("select_targets: baseline does not cover the dataset");

  std::vector<AttackTask> tasks;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto model_label = baseline.outcomes[i].label;

    std::optional<GradeLabel> basis_label;
    if (scope.basis == SelectionBasis::ModelLabel) {
      basis_label = model_label;  // unparseable baseline: no defined basis
    } else {
      basis_label = dataset.items[i].label;
    }
    if (!basis_label) continue;

    std::optional<GradeLabel> target;
    if (scope.mode == ScopeMode::IncorrectOnly) {
      if (*basis_label == GradeLabel::Incorrect) target = GradeLabel::Correct;
    } else {
      target = flip(*basis_label);
    }
    if (!target) continue;
    if (scope.exclude_already_target && model_label == *target) continue;

    tasks.push_back({i, *target, model_label});
  }
  return tasks;
}

std::vector<AttackRecord> run_attacks(const Dataset& dataset, std::span<const AttackTask> tasks,
                                      const AttackMethod& method, const GradingModel& grader,
                                      const PromptTemplate& tmpl, int workers) {
  // Capability and configuration problems must surface before any attack.
  if (method.kind == AttackMethodKind::Gcg) {
    if (grader.capability() != Capability::WhiteBox)
      throw CapabilityError("gcg needs a white-box grader, \"" + grader.name() +
                            "\" is black-box");
    method.gcg.validate(grader.vocab());
  }

  std::vector<AttackRecord> records(tasks.size());
  parallel_for(tasks.size(), workers, [&](std::size_t i) {
    const auto& task = tasks[i];
    const auto& item = dataset.items.at(task.item_index);
    if (method.kind == AttackMethodKind::Gcg) {
      GcgConfig cfg = method.gcg;
      cfg.seed = method.gcg.seed + static_cast<std::uint64_t>(i);
      records[i] = gcg_attack(item, grader, task.target, cfg, tmpl, task.pre_label);
    } else if (method.placement) {
      records[i] = role_play_attack(item, grader, task.target, *method.placement,
                                    method.role_string, tmpl, task.pre_label);
    } else {
      const auto& variants = enumerate_placements();
      records[i] = optimize_prompt_attack(item, grader, task.target, variants,
                                          method.role_string, tmpl, task.pre_label);
    }
  });
  return records;
}

EvalReport camouflage_eval(const BaselineReport& baseline, std::span<const AttackRecord> records,
                           const Dataset& dataset, const CasParams& cas_params) {
  if (baseline.outcomes.size() != dataset.size())
    throw DomainError("camouflage_eval: baseline does not cover the dataset");

  std::unordered_map<std::string_view, std::size_t> index_by_id;
  for (std::size_t i = 0; i < dataset.size(); ++i) index_by_id.emplace(dataset.items[i].id, i);

  std::vector<std::optional<GradeLabel>> before_labels;
  before_labels.reserve(dataset.size());
  for (const auto& outcome : baseline.outcomes) before_labels.push_back(outcome.label);

  // Attacked items take their adversarial outcome, everything else keeps
  // its baseline grade.
  std::vector<std::optional<GradeLabel>> after_labels = before_labels;
  std::vector<bool> attacked(dataset.size(), false);
  for (const auto& record : records) {
    const auto it = index_by_id.find(record.item_id);
    if (it == index_by_id.end())
      throw DomainError("camouflage_eval: record item \"" + record.item_id +
                        "\" not in dataset");
    if (attacked[it->second])
      throw DomainError("camouflage_eval: duplicate record for item \"" + record.item_id +
                        "\"");
    attacked[it->second] = true;
    after_labels[it->second] = record.outcome.label;
  }

  std::vector<GradeLabel> truth;
  truth.reserve(dataset.size());
  for (const auto& item : dataset.items) truth.push_back(item.label);

  EvalReport report;
  report.dataset_size = dataset.size();
  report.a_before = baseline.accuracy;
  report.a_after = compute_accuracy(after_labels, truth);
  if (!(report.a_before > 0.0))
    throw DomainError("camouflage_eval: accuracy before attack is 0, ratio undefined");
  report.ratio = report.a_after / report.a_before;
  report.asr = records.empty() ? 0.0 : compute_asr(records);

  const auto cas = compute_cas_result(report.asr, {report.a_before, report.a_after}, cas_params);
  report.cas = cas.value;
  report.clamp_fired = cas.clamped;

  report.correct_label_delta = label_proportion_delta(
      std::span<const std::optional<GradeLabel>>(before_labels.data(), before_labels.size()),
      std::span<const std::optional<GradeLabel>>(after_labels.data(), after_labels.size()));

  report.attacked_count = records.size();
  report.baseline_grader_calls = baseline.grader_calls;
  for (const auto& record : records) {
    if (record.success) ++report.success_count;
    report.attack_grader_calls += record.grader_calls;
    report.loss_evals += record.loss_evals;
    report.gradient_evals += record.gradient_evals;
    report.records.push_back(summarize(record));
  }
  return report;
}

EvalReport run_pipeline_with_baseline(const BaselineReport& baseline, const Dataset& dataset,
                                      const GradingModel& grader, const PromptTemplate& tmpl,
                                      const PipelineConfig& config) {
  const auto tasks = select_targets(baseline, dataset, config.scope);
  const auto records =
      run_attacks(dataset, tasks, config.method, grader, tmpl, config.workers);
  EvalReport report = camouflage_eval(baseline, records, dataset, config.cas);

  report.config.grader = grader.name();
  report.config.dataset = dataset.name;
  report.config.method = std::string(method_name(config.method.kind));
  report.config.scope = std::string(scope_mode_name(config.scope.mode));
  report.config.basis = std::string(basis_name(config.scope.basis));
  if (config.method.kind == AttackMethodKind::RolePlay) {
    report.config.placement = config.method.placement
                              ? std::string(placement_code(*config.method.placement))
                              : std::string("search");
    report.config.role_string = config.method.role_string;
  }
  report.config.template_name = tmpl.name();
  report.config.gcg = config.method.gcg;
  report.config.cas = config.cas;
  report.config.workers = config.workers;
  report.config.exclude_already_target = config.scope.exclude_already_target;
  return report;
}

EvalReport run_pipeline(const Dataset& dataset, const GradingModel& grader,
                        const PromptTemplate& tmpl, const PipelineConfig& config) {
  const auto baseline = baseline_grade(dataset, grader, tmpl, config.workers);
  return run_pipeline_with_baseline(baseline, dataset, grader, tmpl, config);
}

}  // namespace gradeprobe
