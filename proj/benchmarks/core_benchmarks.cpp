#include <benchmark/benchmark.h>

#include "gradeprobe/attacks.hpp"
#include "gradeprobe/fixtures.hpp"
#include "gradeprobe/metrics.hpp"
#include "gradeprobe/prompt.hpp"
#include "gradeprobe/surrogate.hpp"

namespace {

using namespace gradeprobe;

const Dataset& dataset() {
  static const Dataset ds = fixtures::planted_dataset();
  return ds;
}

const SurrogateGrader& grader() {
  static const SurrogateGrader g = fixtures::planted_grader();
  return g;
}

void BM_render_prompt(benchmark::State& state) {
  const auto& item = dataset().items.front();
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_grading_prompt(item, PromptTemplate::default_template()));
  }
}
BENCHMARK(BM_render_prompt);

void BM_parse_grade(benchmark::State& state) {
  const std::string response =
      "Checking each step against the solution.\nThe second step drifts.\n"
      "Result: Incorrect";
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_grade(response));
  }
}
BENCHMARK(BM_parse_grade);

void BM_surrogate_grade(benchmark::State& state) {
  const auto prompt =
      render_grading_prompt(dataset().items.front(), PromptTemplate::default_template());
  for (auto _ : state) {
    benchmark::DoNotOptimize(grader().grade(prompt.text));
  }
}
BENCHMARK(BM_surrogate_grade);

void BM_suffix_loss(benchmark::State& state) {
  const auto prompt =
      render_grading_prompt(dataset().items.front(), PromptTemplate::default_template());
  TokenSeq suffix;
  suffix.ids.assign(20, static_cast<std::int32_t>(*grader().vocab().find("!")));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        grader().suffix_loss(prompt.text, suffix, GradeLabel::Correct));
  }
}
BENCHMARK(BM_suffix_loss);

void BM_suffix_gradient(benchmark::State& state) {
  const auto prompt =
      render_grading_prompt(dataset().items.front(), PromptTemplate::default_template());
  TokenSeq suffix;
  suffix.ids.assign(20, static_cast<std::int32_t>(*grader().vocab().find("!")));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        grader().suffix_gradient(prompt.text, suffix, GradeLabel::Correct));
  }
}
BENCHMARK(BM_suffix_gradient);

void BM_gcg_step(benchmark::State& state) {
  const auto prompt =
      render_grading_prompt(dataset().items[30], PromptTemplate::default_template());
  GcgConfig cfg;
  cfg.top_k = static_cast<std::size_t>(state.range(0));
  cfg.batch = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    state.PauseTiming();
    GcgState gcg = make_gcg_state(prompt, grader(), cfg);
    state.ResumeTiming();
    benchmark::DoNotOptimize(gcg_step(gcg, grader(), GradeLabel::Correct, cfg));
  }
}
BENCHMARK(BM_gcg_step)->Arg(16)->Arg(64)->Arg(256);

void BM_compute_cas(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_cas(0.3279, {1.0, 0.8193}));
  }
}
BENCHMARK(BM_compute_cas);

}  // namespace
