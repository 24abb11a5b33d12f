#include <doctest.h>

#include <cmath>
#include <random>

#include "gradeprobe/attacks.hpp"
#include "gradeprobe/errors.hpp"
#include "gradeprobe/fixtures.hpp"
#include "gradeprobe/rule_grader.hpp"
#include "gradeprobe/surrogate.hpp"
#include "support.hpp"

using namespace gradeprobe;

namespace {

Interaction item_with_answer(std::string answer) {
  Interaction item;
  item.id = "a1";
  item.student_id = "s";
  item.question = "Add 2 and 3.";
  item.solution = "5";
  item.student_answer = std::move(answer);
  item.label = GradeLabel::Incorrect;
  return item;
}

/// Surrogate over a small vocabulary with one strongly positive token, one
/// mildly negative keyword and assorted weak tokens.
SurrogateGrader small_planted_grader() {
  auto vocab = testing::small_vocab({"best", "bad", "t0", "t1", "t2", "t3", "t4", "t5"});
  SurrogateSpec spec;
  spec.dims = 8;
  spec.seed = 7;
  spec.rules = {{"bad", -3.0}, {"t0", 0.2}, {"t1", -0.4}, {"t2", 0.7},
                {"t3", -0.1}, {"t4", 0.3}, {"t5", 0.05}};
  spec.vulnerable_tokens = {{"best", 9.0}};
  return SurrogateGrader(std::move(vocab), spec);
}

/// Exhaustive loss minimum over all single-token suffixes.
std::pair<std::int32_t, double> best_single_token(const SurrogateGrader& grader,
                                                  const std::string& base, GradeLabel target) {
  std::int32_t best = -1;
  double best_loss = std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < grader.vocab().size(); ++v) {
    TokenSeq suffix;
    suffix.ids = {static_cast<std::int32_t>(v)};
    const double loss = grader.suffix_loss(base, suffix, target);
    if (loss < best_loss) {
      best_loss = loss;
      best = static_cast<std::int32_t>(v);
    }
  }
  return {best, best_loss};
}

/// Greedy coordinate descent over the single-substitution move set: sweep
/// every (position, token) substitution, adopt the best strict improvement,
/// repeat until a full sweep finds none.
double coordinate_descent_oracle(const GradingModel& grader, const std::string& base,
                                 TokenSeq suffix, GradeLabel target) {
  const auto& vocab = grader.vocab();
  double incumbent = grader.suffix_loss(base, suffix, target);
  for (;;) {
    double best = incumbent;
    std::size_t best_pos = 0;
    std::int32_t best_tok = 0;
    bool improved = false;
    for (std::size_t pos = 0; pos < suffix.size(); ++pos) {
      const std::int32_t previous = suffix.ids[pos];
      for (std::size_t v = 0; v < vocab.size(); ++v) {
        suffix.ids[pos] = static_cast<std::int32_t>(v);
        const double loss = grader.suffix_loss(base, suffix, target);
        if (loss < best) {
          best = loss;
          best_pos = pos;
          best_tok = static_cast<std::int32_t>(v);
          improved = true;
        }
      }
      suffix.ids[pos] = previous;
    }
    if (!improved) return incumbent;
    suffix.ids[best_pos] = best_tok;
    incumbent = best;
  }
}

}  // namespace

TEST_CASE("exhaustive-parameter gcg picks the brute-force argmin token") {
  const auto grader = small_planted_grader();
  const auto item = item_with_answer("my result looks bad overall");
  const auto& tmpl = PromptTemplate::default_template();

  GcgConfig cfg;
  cfg.suffix_len = 1;
  cfg.top_k = grader.vocab().size();
  cfg.batch = grader.vocab().size();
  cfg.max_iters = 4;

  const auto record = gcg_attack(item, grader, GradeLabel::Correct, cfg, tmpl);

  const auto prompt = render_grading_prompt(item, tmpl);
  const auto [oracle_token, oracle_loss] =
      best_single_token(grader, prompt.text, GradeLabel::Correct);

  CHECK(oracle_token == static_cast<std::int32_t>(*grader.vocab().find("best")));
  REQUIRE_FALSE(record.gcg_trace.empty());
  CHECK(record.gcg_trace.back().suffix.ids == std::vector<std::int32_t>{oracle_token});
  CHECK(record.gcg_trace.back().loss == doctest::Approx(oracle_loss).epsilon(1e-12));
  CHECK(record.success);
  CHECK(record.iterations == 1);
}

TEST_CASE("gcg exits immediately when the clean prompt already grades as target") {
  const auto grader = small_planted_grader();
  const auto item = item_with_answer("plain answer with no keywords");  // p = 0.5 -> Correct
  GcgConfig cfg;
  cfg.suffix_len = 4;
  cfg.top_k = 4;
  cfg.batch = 4;

  const testing::CountingGrader counted(grader);
  const auto record = gcg_attack(item, counted, GradeLabel::Correct, cfg,
                                 PromptTemplate::default_template());
  CHECK(record.success);
  CHECK(record.iterations == 0);
  CHECK(record.gcg_trace.empty());
  CHECK(record.grader_calls == 1);
  CHECK(counted.grades.load() == 1);
  CHECK(counted.losses.load() == 0);
  CHECK(counted.gradients.load() == 0);

  // The recorded suffix is the untouched initialization.
  const auto& derivation = std::get<SuffixDerivation>(record.final_prompt.derivation);
  CHECK(derivation.suffix.ids ==
        std::vector<std::int32_t>(4, static_cast<std::int32_t>(*grader.vocab().find("!"))));
}

TEST_CASE("gcg runs are deterministic for a fixed seed") {
  const auto grader = small_planted_grader();
  const auto item = item_with_answer("bad bad bad bad bad bad bad bad");
  GcgConfig cfg;
  cfg.suffix_len = 3;
  cfg.top_k = 5;
  cfg.batch = 6;
  cfg.max_iters = 12;
  cfg.seed = 99;

  const auto& tmpl = PromptTemplate::default_template();
  const auto a = gcg_attack(item, grader, GradeLabel::Correct, cfg, tmpl);
  const auto b = gcg_attack(item, grader, GradeLabel::Correct, cfg, tmpl);
  CHECK(a.gcg_trace == b.gcg_trace);
  CHECK(a.final_prompt.text == b.final_prompt.text);
  CHECK(a.success == b.success);
  CHECK(a.loss_evals == b.loss_evals);

  GcgConfig other = cfg;
  other.seed = 100;
  const auto c = gcg_attack(item, grader, GradeLabel::Correct, other, tmpl);
  CHECK(c.success == a.success);  // same optimum either way on this fixture
}

TEST_CASE("gcg_step keeps the incumbent when nothing improves") {
  const auto grader = small_planted_grader();
  const auto item = item_with_answer("bad result");
  const auto prompt = render_grading_prompt(item, PromptTemplate::default_template());

  GcgConfig cfg;
  cfg.suffix_len = 2;
  cfg.top_k = grader.vocab().size();
  cfg.batch = 2 * grader.vocab().size();
  cfg.max_iters = 64;

  // Drive the state to the single-substitution optimum first.
  GcgState state = make_gcg_state(prompt, grader, cfg);
  double loss = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 8; ++i) loss = gcg_step(state, grader, GradeLabel::Correct, cfg);

  const TokenSeq at_optimum = state.suffix;
  const double after = gcg_step(state, grader, GradeLabel::Correct, cfg);
  CHECK(state.suffix == at_optimum);
  CHECK(after == doctest::Approx(loss).epsilon(1e-12));
}

TEST_CASE("gcg_step evaluates incumbent plus batch candidates") {
  const auto grader = small_planted_grader();
  const testing::CountingGrader counted(grader);
  const auto item = item_with_answer("bad result");
  const auto prompt = render_grading_prompt(item, PromptTemplate::default_template());

  GcgConfig cfg;
  cfg.suffix_len = 3;
  cfg.top_k = 1;
  cfg.batch = 1;

  GcgState state = make_gcg_state(prompt, counted, cfg);
  gcg_step(state, counted, GradeLabel::Correct, cfg);
  CHECK(counted.losses.load() == 2);  // incumbent + one candidate
  CHECK(counted.gradients.load() == 1);

  cfg.batch = 5;
  GcgState wide = make_gcg_state(prompt, counted, cfg);
  counted.losses = 0;
  counted.gradients = 0;
  gcg_step(wide, counted, GradeLabel::Correct, cfg);
  CHECK(counted.losses.load() == 1 + 3);  // grid is suffix_len x top_k = 3
}

TEST_CASE("gcg_step never increases the loss over many random states") {
  std::mt19937_64 rng(404);
  const auto grader = small_planted_grader();
  const auto& vocab = grader.vocab();
  const auto item = item_with_answer("bad bad answer");
  const auto prompt = render_grading_prompt(item, PromptTemplate::default_template());

  GcgConfig cfg;
  cfg.suffix_len = 3;
  cfg.top_k = 4;
  cfg.batch = 4;

  std::uniform_int_distribution<std::int32_t> pick(0, static_cast<std::int32_t>(vocab.size()) - 1);
  for (int round = 0; round < 1000; ++round) {
    GcgState state = make_gcg_state(prompt, grader, cfg);
    for (auto& id : state.suffix.ids) id = pick(rng);
    state.rng.seed(rng());
    const GradeLabel target = (round & 1) ? GradeLabel::Correct : GradeLabel::Incorrect;
    const double before = grader.suffix_loss(prompt.text, state.suffix, target);
    const double after = gcg_step(state, grader, target, cfg);
    CHECK(after <= before + 1e-15);
  }
}

TEST_CASE("gcg trace losses are non-increasing and suffixes stay well-formed") {
  const auto grader = fixtures::planted_grader();
  const auto dataset = fixtures::planted_dataset();
  GcgConfig cfg;
  cfg.max_iters = 30;

  for (std::size_t i = 25; i < 30; ++i) {  // model-Incorrect items
    const auto record = gcg_attack(dataset.items[i], grader, GradeLabel::Correct, cfg,
                                   PromptTemplate::default_template());
    for (std::size_t t = 1; t < record.gcg_trace.size(); ++t)
      CHECK(record.gcg_trace[t].loss <= record.gcg_trace[t - 1].loss + 1e-15);
    for (const auto& point : record.gcg_trace) {
      CHECK(point.suffix.size() == cfg.suffix_len);
      CHECK(grader.vocab().covers(point.suffix));
    }
    CHECK(record.success);
  }
}

TEST_CASE("gcg stays within the white-box evaluation budget") {
  const auto grader = small_planted_grader();
  const auto item = item_with_answer(
      "bad bad bad bad bad bad bad bad bad bad bad bad bad bad bad bad bad bad bad bad bad bad "
      "bad bad bad bad bad bad bad bad bad bad bad bad bad bad bad bad bad bad");  // unreachable
  GcgConfig cfg;
  cfg.suffix_len = 2;
  cfg.top_k = 3;
  cfg.batch = 4;
  cfg.max_iters = 9;

  const auto record = gcg_attack(item, grader, GradeLabel::Correct, cfg,
                                 PromptTemplate::default_template());
  CHECK_FALSE(record.success);
  CHECK(record.iterations == cfg.max_iters);
  CHECK(record.loss_evals + record.gradient_evals <=
        static_cast<long>(cfg.max_iters) * static_cast<long>(cfg.batch + 2));
}

TEST_CASE("full-sweep gcg matches the coordinate-descent oracle") {
  // Targets are kept unreachable so neither side stops early.
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> small_weight(0.05, 2.0);

  for (int instance = 0; instance < 20; ++instance) {
    std::vector<std::string> words;
    for (int i = 0; i < 29; ++i) words.push_back("v" + std::to_string(i));
    words.push_back("anchor");
    auto vocab = testing::small_vocab(words);  // |V| = 32
    REQUIRE(vocab.size() == 32);

    SurrogateSpec spec;
    spec.dims = 6;
    spec.seed = 5000 + static_cast<std::uint64_t>(instance);
    for (int i = 0; i < 29; ++i) spec.rules["v" + std::to_string(i)] = small_weight(rng);
    spec.rules["anchor"] = -40.0;
    SurrogateGrader grader(std::move(vocab), spec);

    const auto item = item_with_answer("anchor anchor it stands");
    const std::size_t suffix_len = 1 + instance % 2;

    GcgConfig cfg;
    cfg.suffix_len = suffix_len;
    cfg.top_k = 32;
    cfg.batch = 32 * suffix_len;
    cfg.max_iters = static_cast<int>(32 * suffix_len);
    cfg.seed = 9000 + static_cast<std::uint64_t>(instance);

    const auto& tmpl = PromptTemplate::default_template();
    const auto record = gcg_attack(item, grader, GradeLabel::Correct, cfg, tmpl);
    REQUIRE_FALSE(record.success);

    const auto prompt = render_grading_prompt(item, tmpl);
    TokenSeq init;
    init.ids.assign(suffix_len, static_cast<std::int32_t>(*grader.vocab().find("!")));
    const double oracle =
        coordinate_descent_oracle(grader, prompt.text, init, GradeLabel::Correct);

    REQUIRE_FALSE(record.gcg_trace.empty());
    CHECK(record.gcg_trace.back().loss <= oracle + 1e-12);
  }
}

TEST_CASE("a zero iteration cap grades the initialization suffix only") {
  const auto grader = small_planted_grader();
  const auto item = item_with_answer("bad result stays");
  GcgConfig cfg;
  cfg.suffix_len = 4;
  cfg.max_iters = 0;
  cfg.top_k = 4;
  cfg.batch = 4;

  const auto record = gcg_attack(item, grader, GradeLabel::Correct, cfg,
                                 PromptTemplate::default_template());
  CHECK_FALSE(record.success);
  CHECK(record.iterations == 0);
  CHECK(record.gcg_trace.empty());
  CHECK(record.loss_evals == 0);
  CHECK(record.grader_calls == 2);  // clean grade + final grade
}

TEST_CASE("gcg validates capability and configuration up front") {
  const RuleGrader black_box;
  const auto item = item_with_answer("whatever");
  GcgConfig cfg;
  CHECK_THROWS_AS(
      gcg_attack(item, black_box, GradeLabel::Correct, cfg, PromptTemplate::default_template()),
      CapabilityError);

  const auto grader = small_planted_grader();
  GcgConfig too_wide;
  too_wide.top_k = grader.vocab().size() + 1;
  CHECK_THROWS_AS(gcg_attack(item, grader, GradeLabel::Correct, too_wide,
                             PromptTemplate::default_template()),
                  ConfigError);
  GcgConfig bad_init;
  bad_init.init_token = "nosuchtoken";
  CHECK_THROWS_AS(gcg_attack(item, grader, GradeLabel::Correct, bad_init,
                             PromptTemplate::default_template()),
                  ConfigError);
}

TEST_CASE("role-play attack against an end-sensitive grader") {
  const auto grader = testing::end_sensitive_grader(default_role_string());
  const auto item = item_with_answer("some answer");
  const auto& tmpl = PromptTemplate::default_template();

  const auto hit = role_play_attack(item, grader, GradeLabel::Correct, PlacementVariant::PR,
                                    default_role_string(), tmpl);
  CHECK(hit.success);
  CHECK(hit.grader_calls == 1);
  CHECK(hit.final_prompt.text.find("role-playing game") != std::string::npos);
  REQUIRE(hit.placement_trace.size() == 1);
  CHECK(hit.placement_trace[0].variant == PlacementVariant::PR);

  const auto miss = role_play_attack(item, grader, GradeLabel::Correct, PlacementVariant::RS,
                                     default_role_string(), tmpl);
  CHECK_FALSE(miss.success);
  CHECK(miss.grader_calls == 1);
}

TEST_CASE("transport failures land in the record, not as exceptions") {
  const testing::FailingGrader failing;
  const auto item = item_with_answer("answer");
  const auto record = role_play_attack(item, failing, GradeLabel::Correct, PlacementVariant::PR,
                                       default_role_string(),
                                       PromptTemplate::default_template());
  CHECK_FALSE(record.success);
  CHECK_FALSE(record.outcome.label.has_value());
  CHECK(record.outcome.error.find("transport") != std::string::npos);
}

TEST_CASE("placement search returns the first success with the trace so far") {
  const auto grader = testing::end_sensitive_grader(default_role_string());
  const auto item = item_with_answer("some answer");
  const auto& tmpl = PromptTemplate::default_template();

  const std::vector<PlacementVariant> two = {PlacementVariant::RS, PlacementVariant::PR};
  const auto record = optimize_prompt_attack(item, grader, GradeLabel::Correct, two,
                                             default_role_string(), tmpl);
  CHECK(record.success);
  REQUIRE(record.placement_trace.size() == 2);
  CHECK(record.placement_trace[0].variant == PlacementVariant::RS);
  CHECK(record.placement_trace[1].variant == PlacementVariant::PR);
  CHECK(record.grader_calls == 2);

  // First variant succeeding stops immediately.
  const std::vector<PlacementVariant> front = {PlacementVariant::PR, PlacementVariant::RS};
  const auto quick = optimize_prompt_attack(item, grader, GradeLabel::Correct, front,
                                            default_role_string(), tmpl);
  CHECK(quick.success);
  CHECK(quick.grader_calls == 1);

  // All six fail against a never-matching grader.
  const testing::ScriptedGrader stubborn({}, "Result: Incorrect");
  const auto all = optimize_prompt_attack(item, stubborn, GradeLabel::Correct,
                                          enumerate_placements(), default_role_string(), tmpl);
  CHECK_FALSE(all.success);
  CHECK(all.placement_trace.size() == 6);

  CHECK_THROWS_AS(optimize_prompt_attack(item, grader, GradeLabel::Correct,
                                         std::span<const PlacementVariant>{},
                                         default_role_string(), tmpl),
                  DomainError);
}

TEST_CASE("asr over records counts target hits") {
  std::vector<AttackRecord> records(4);
  records[0].success = true;
  records[2].success = true;
  CHECK(compute_asr(std::span<const AttackRecord>(records)) == 0.5);
  CHECK_THROWS_AS(compute_asr(std::span<const AttackRecord>{}), DomainError);
}
