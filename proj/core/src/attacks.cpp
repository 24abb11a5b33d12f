#include "gradeprobe/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "gradeprobe/errors.hpp"
#include "gradeprobe/metrics.hpp"

namespace gradeprobe {

std::string_view method_name(AttackMethodKind kind) {
  return kind == AttackMethodKind::Gcg ? "gcg" : "role_play";
}

std::optional<AttackMethodKind> method_from_name(std::string_view name) {
  if (name == "gcg") return AttackMethodKind::Gcg;
  if (name == "role_play" || name == "role-play") return AttackMethodKind::RolePlay;
  return std::nullopt;
}

void GcgConfig::validate(const Vocabulary& vocab) const {
  if (suffix_len < 1) throw ConfigError("gcg: suffix_len must be >= 1");
  if (max_iters < 0) throw ConfigError("gcg: max_iters must be >= 0");
  if (top_k < 1) throw ConfigError("gcg: top_k must be >= 1");
  if (top_k > vocab.size())
    throw ConfigError("gcg: top_k " + std::to_string(top_k) + " exceeds vocabulary size " +
                      std::to_string(vocab.size()));
  if (batch < 1) throw ConfigError("gcg: batch must be >= 1");
  if (!vocab.contains(init_token))
    throw ConfigError("gcg: init token \"" + init_token + "\" not in vocabulary");
}

double compute_asr(std::span<const AttackRecord> records) {
  std::vector<bool> successes;
  successes.reserve(records.size());
  for (const auto& record : records) successes.push_back(record.success);
  return compute_asr(successes);
}

namespace {

/// Binary-grade equivalence: with p(Correct) >= 0.5 mapping to Correct, the
/// target is reached iff -log p(target) clears log 2 on the right side.
bool loss_implies_target(double loss, GradeLabel target) {
  return target == GradeLabel::Correct ? loss <= std::numbers::ln2 : loss < std::numbers::ln2;
}

GradeOutcome grade_capturing_transport(const GradingModel& grader, const std::string& text) {
  try {
    return grader.grade(text);
  } catch (const TransportError& e) {
    GradeOutcome outcome;
    outcome.error = e.what();
    return outcome;
  } catch (const EndpointError& e) {
    GradeOutcome outcome;
    outcome.error = e.what();
    return outcome;
  }
}

}  // namespace

GcgState make_gcg_state(const GradingPrompt& prompt, const GradingModel& grader,
                        const GcgConfig& cfg) {
  if (grader.capability() != Capability::WhiteBox)
    throw CapabilityError("gcg needs a white-box grader, \"" + grader.name() +
                          "\" is black-box");
  const auto& vocab = grader.vocab();
  cfg.validate(vocab);

  GcgState state;
  state.base_text = prompt.text;
  state.suffix.ids.assign(cfg.suffix_len,
                          static_cast<std::int32_t>(*vocab.find(cfg.init_token)));
  state.rng.seed(cfg.seed);
  return state;
}

double gcg_step(GcgState& state, const GradingModel& grader, GradeLabel target,
                const GcgConfig& cfg) {
  const auto& vocab = grader.vocab();
  const std::size_t suffix_len = state.suffix.size();
  const std::size_t vocab_size = vocab.size();

  double incumbent = grader.suffix_loss(state.base_text, state.suffix, target);
  ++state.loss_evals;

  const GradientMatrix grad = grader.suffix_gradient(state.base_text, state.suffix, target);
  ++state.gradient_evals;

  // Per position, the top_k tokens with the lowest (most loss-reducing)
  // gradient entries; ties break toward the lower token index.
  std::vector<std::vector<std::int32_t>> candidates(suffix_len);
  std::vector<std::int32_t> order(vocab_size);
  for (std::size_t pos = 0; pos < suffix_len; ++pos) {
    std::iota(order.begin(), order.end(), 0);
    const double* row = grad.values.data() + pos * vocab_size;
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cfg.top_k),
                      order.end(), [row](std::int32_t a, std::int32_t b) {
                        if (row[a] != row[b]) return row[a] < row[b];
                        return a < b;
                      });
    candidates[pos].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cfg.top_k));
  }

  // Uniform sample without replacement from the (position x candidate) grid;
  // batch >= grid size degenerates to a full sweep.
  const std::size_t grid_size = suffix_len * cfg.top_k;
  const std::size_t sample_count = std::min(cfg.batch, grid_size);
  std::vector<std::size_t> grid(grid_size);
  std::iota(grid.begin(), grid.end(), std::size_t{0});
  for (std::size_t i = 0; i < sample_count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, grid_size - 1);
    std::swap(grid[i], grid[pick(state.rng)]);
  }

  double best_loss = incumbent;
  std::size_t best_pos = 0;
  std::int32_t best_token = 0;
  bool improved = false;

  TokenSeq candidate = state.suffix;
  for (std::size_t i = 0; i < sample_count; ++i) {
    const std::size_t pos = grid[i] / cfg.top_k;
    const std::int32_t token = candidates[pos][grid[i] % cfg.top_k];
    const std::int32_t previous = candidate.ids[pos];
    candidate.ids[pos] = token;
    const double loss = grader.suffix_loss(state.base_text, candidate, target);
    ++state.loss_evals;
    candidate.ids[pos] = previous;
    if (loss < best_loss) {
      best_loss = loss;
      best_pos = pos;
      best_token = token;
      improved = true;
    }
  }

  if (improved) state.suffix.ids[best_pos] = best_token;
  state.incumbent_loss = best_loss;
  return best_loss;
}

AttackRecord gcg_attack(const Interaction& item, const GradingModel& grader, GradeLabel target,
                        const GcgConfig& cfg, const PromptTemplate& tmpl,
                        std::optional<GradeLabel> known_pre_label) {
  const GradingPrompt prompt = render_grading_prompt(item, tmpl);
  GcgState state = make_gcg_state(prompt, grader, cfg);
  const auto& vocab = grader.vocab();

  AttackRecord record;
  record.item_id = item.id;
  record.method = AttackMethodKind::Gcg;
  record.target = target;

  GradeOutcome clean;
  bool have_clean = false;
  if (known_pre_label) {
    record.pre_attack_label = known_pre_label;
  } else {
    clean = grader.grade(prompt.text);
    ++record.grader_calls;
    have_clean = true;
    record.pre_attack_label = clean.label;
  }

  if (record.pre_attack_label == target) {
    // The unattacked prompt already yields the target: keep the
    // initialization suffix and stop.
    if (!have_clean) {
      clean = grader.grade(prompt.text);
      ++record.grader_calls;
    }
    record.final_prompt = append_suffix(prompt, state.suffix, vocab);
    record.outcome = clean;
    record.success = clean.label == target;
    return record;
  }

  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    const double loss = gcg_step(state, grader, target, cfg);
    record.gcg_trace.push_back({loss, state.suffix});
    record.iterations = iter;
    if (loss_implies_target(loss, target)) break;
  }

  record.final_prompt = append_suffix(prompt, state.suffix, vocab);
  record.outcome = grader.grade(record.final_prompt.text);
  ++record.grader_calls;
  record.success = record.outcome.label == target;
  record.loss_evals = state.loss_evals;
  record.gradient_evals = state.gradient_evals;
  return record;
}

AttackRecord role_play_attack(const Interaction& item, const GradingModel& grader,
                              GradeLabel target, PlacementVariant variant,
                              const std::string& role_string, const PromptTemplate& tmpl,
                              std::optional<GradeLabel> known_pre_label) {
  const GradingPrompt prompt = render_grading_prompt(item, tmpl);

  AttackRecord record;
  record.item_id = item.id;
  record.method = AttackMethodKind::RolePlay;
  record.target = target;
  record.pre_attack_label = known_pre_label;

  record.final_prompt = apply_role_play(prompt, variant, role_string);
  record.outcome = grade_capturing_transport(grader, record.final_prompt.text);
  record.grader_calls = 1;
  record.iterations = 1;
  record.success = record.outcome.label == target;
  record.placement_trace.push_back({variant, record.outcome.label, record.outcome.error});
  return record;
}

AttackRecord optimize_prompt_attack(const Interaction& item, const GradingModel& grader,
                                    GradeLabel target,
                                    std::span<const PlacementVariant> variants,
                                    const std::string& role_string, const PromptTemplate& tmpl,
                                    std::optional<GradeLabel> known_pre_label) {
  if (variants.empty()) throw DomainError("optimize_prompt_attack: no placement variants");

  const GradingPrompt prompt = render_grading_prompt(item, tmpl);

  AttackRecord record;
  record.item_id = item.id;
  record.method = AttackMethodKind::RolePlay;
  record.target = target;
  record.pre_attack_label = known_pre_label;

  for (const auto variant : variants) {
    record.final_prompt = apply_role_play(prompt, variant, role_string);
    record.outcome = grade_capturing_transport(grader, record.final_prompt.text);
    ++record.grader_calls;
    ++record.iterations;
    record.placement_trace.push_back({variant, record.outcome.label, record.outcome.error});
    if (record.outcome.label == target) {
      record.success = true;
      break;
    }
  }
  return record;
}

}  // namespace gradeprobe
