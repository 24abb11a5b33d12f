#include "gradeprobe/fixtures.hpp"

#include <cstdio>
#include <fstream>

#include "gradeprobe/errors.hpp"

namespace gradeprobe::fixtures {

namespace {

constexpr int kFillerCount = 506;  // 6 named tokens + fillers = 512

std::string filler_word(int i) {
  char buffer[8];
  std::snprintf(buffer, sizeof(buffer), "w%03d", i);
  return buffer;
}

/// Student answer with `repeats` occurrences of the keyword plus a claimed
/// value.
std::string keyword_answer(const std::string& keyword, int repeats, const std::string& value) {
  std::string answer = "checked the steps:";
  for (int i = 0; i < repeats; ++i) {
    answer += ' ';
    answer += keyword;
  }
  answer += " so the total is " + value;
  return answer;
}

Interaction make_item(std::string id, int a, int b, bool truth_correct, bool model_correct) {
  Interaction item;
  item.id = std::move(id);
  item.student_id = "student-" + item.id;
  item.question = "Add " + std::to_string(a) + " and " + std::to_string(b) + ".";
  item.solution = std::to_string(a + b);
  const std::string value = truth_correct ? std::to_string(a + b) : std::to_string(a + b + 1);
  item.student_answer = keyword_answer(model_correct ? "consistent" : "contradicts", 3, value);
  item.label = truth_correct ? GradeLabel::Correct : GradeLabel::Incorrect;
  return item;
}

Interaction make_strong_item(std::string id, int a, int b, bool truth_correct,
                             bool model_correct) {
  Interaction item = make_item(std::move(id), a, b, truth_correct, model_correct);
  const std::string value =
      truth_correct ? std::to_string(a + b) : std::to_string(a + b + 1);
  item.student_answer =
      keyword_answer(model_correct ? "consistent" : "contradicts", 95, value);
  return item;
}

std::string item_id(const char* prefix, std::size_t i) {
  char buffer[16];
  std::snprintf(buffer, sizeof(buffer), "%s-%03zu", prefix, i);
  return buffer;
}

}  // namespace

Vocabulary planted_vocab() {
  std::vector<std::string> tokens = {"!", "unk", "amplify", "suppress", "consistent",
                                     "contradicts"};
  tokens.reserve(tokens.size() + kFillerCount);
  for (int i = 0; i < kFillerCount; ++i) tokens.push_back(filler_word(i));
  return Vocabulary::from_tokens(std::move(tokens), 1);
}

SurrogateSpec planted_spec() {
  SurrogateSpec spec;
  spec.dims = 16;
  spec.seed = 42;
  spec.bias = 0.0;
  spec.noise_scale = 0.05;
  spec.rules = {{"consistent", 6.0}, {"contradicts", -6.0}};
  spec.vulnerable_tokens = {{"amplify", 25.0}, {"suppress", -25.0}};
  return spec;
}

SurrogateGrader planted_grader() { return SurrogateGrader(planted_vocab(), planted_spec()); }

Dataset planted_dataset() {
  Dataset dataset;
  dataset.name = "planted";
  for (std::size_t i = 0; i < 50; ++i) {
    const int a = 3 + static_cast<int>(i);
    const int b = 4 + static_cast<int>(i % 7);
    bool truth_correct, model_correct;
    if (i < 20) {
      truth_correct = true, model_correct = true;
    } else if (i < 25) {
      truth_correct = false, model_correct = true;
    } else if (i < 45) {
      truth_correct = false, model_correct = false;
    } else {
      truth_correct = true, model_correct = false;
    }
    dataset.items.push_back(make_item(item_id("pl", i), a, b, truth_correct, model_correct));
  }
  return dataset;
}

Dataset scope_dataset() {
  Dataset dataset;
  dataset.name = "scopes";
  std::size_t i = 0;
  auto add = [&](bool truth_correct, bool model_correct, bool strong) {
    const int a = 2 + static_cast<int>(i);
    const int b = 5 + static_cast<int>(i % 5);
    dataset.items.push_back(strong
                                ? make_strong_item(item_id("sc", i), a, b, truth_correct,
                                                   model_correct)
                                : make_item(item_id("sc", i), a, b, truth_correct,
                                            model_correct));
    ++i;
  };

  // truth Correct, model Correct: 1 weak + 5 strong
  add(true, true, false);
  for (int k = 0; k < 5; ++k) add(true, true, true);
  // truth Incorrect, model Incorrect: 6 weak + 1 strong
  for (int k = 0; k < 6; ++k) add(false, false, false);
  add(false, false, true);
  // truth Correct, model Incorrect: 2 weak
  for (int k = 0; k < 2; ++k) add(true, false, false);
  // truth Incorrect, model Correct: 5 weak
  for (int k = 0; k < 5; ++k) add(false, true, false);
  return dataset;
}

Dataset demo_dataset() {
  Dataset dataset;
  dataset.name = "demo";
  for (std::size_t i = 0; i < 12; ++i) {
    const int a = 1 + static_cast<int>(i);
    const int b = 2 + static_cast<int>(i % 4);
    Interaction item;
    item.id = item_id("demo", i);
    item.student_id = "student-" + std::to_string(i % 3);
    item.question = "What is " + std::to_string(a) + " + " + std::to_string(b) + "?";
    item.solution = std::to_string(a + b);
    if (i % 2 == 0) {
      item.student_answer = "  " + std::to_string(a + b) + " ";  // normalizes to the solution
      item.label = GradeLabel::Correct;
    } else {
      item.student_answer = std::to_string(a + b + 2);
      item.label = GradeLabel::Incorrect;
    }
    dataset.items.push_back(std::move(item));
  }
  return dataset;
}

StubScript end_sensitive_stub_script(const std::string& role_string) {
  StubScript script;
  script.default_reply = "Result: Incorrect";
  StubRule rule;
  rule.ends_with = role_string;
  rule.reply = "Result: Correct";
  script.rules.push_back(std::move(rule));
  return script;
}

void write_bundled_files(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "datasets");
  fs::create_directories(dir / "templates");
  fs::create_directories(dir / "stubs");

  save_dataset(demo_dataset(), dir / "datasets" / "demo.jsonl");
  save_dataset(planted_dataset(), dir / "datasets" / "planted.jsonl");
  save_dataset(scope_dataset(), dir / "datasets" / "scopes.jsonl");

  {
    std::ofstream out(dir / "templates" / "default.txt", std::ios::binary);
    if (!out) throw LoadError("cannot write template file");
    out << PromptTemplate::default_template().body();
  }
  {
    std::ofstream out(dir / "stubs" / "end_sensitive.json", std::ios::binary);
    if (!out) throw LoadError("cannot write stub script");
    out << end_sensitive_stub_script().to_json_text();
  }

  fs::create_directories(dir / "graders");
  {
    std::ofstream out(dir / "graders" / "planted.json", std::ios::binary);
    if (!out) throw LoadError("cannot write grader config");
    out << "{\n"
           "  \"dims\": 16,\n"
           "  \"seed\": 42,\n"
           "  \"bias\": 0.0,\n"
           "  \"noise_scale\": 0.05,\n"
           "  \"rules\": {\"consistent\": 6.0, \"contradicts\": -6.0},\n"
           "  \"vulnerable_tokens\": {\"amplify\": 25.0, \"suppress\": -25.0}\n"
           "}\n";
  }
}

}  // namespace gradeprobe::fixtures
