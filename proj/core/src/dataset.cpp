#include "gradeprobe/dataset.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "gradeprobe/errors.hpp"

namespace gradeprobe {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& name, std::size_t line, const std::string& what) {
  throw LoadError(name + ":" + std::to_string(line) + ": " + what);
}

std::string require_string(const json& record, const char* field, const std::string& name,
                           std::size_t line) {
  auto it = record.find(field);
  if (it == record.end()) fail(name, line, std::string("missing field \"") + field + "\"");
  if (!it->is_string()) fail(name, line, std::string("field \"") + field + "\" must be a string");
  return it->get<std::string>();
}

GradeLabel parse_label(const json& record, const std::string& name, std::size_t line) {
  auto it = record.find("label");
  if (it == record.end()) fail(name, line, "missing field \"label\"");
  if (it->is_number_integer()) {
    const auto v = it->get<long long>();
    if (v == 0) return GradeLabel::Incorrect;
    if (v == 1) return GradeLabel::Correct;
  } else if (it->is_string()) {
    const auto& s = it->get_ref<const std::string&>();
    if (s == "0") return GradeLabel::Incorrect;
    if (s == "1") return GradeLabel::Correct;
  }
  fail(name, line, "invalid label (expected 0 or 1): " + it->dump());
}

}  // namespace

Dataset parse_dataset(const std::string& text, const std::string& name) {
  Dataset dataset;
  dataset.name = name;
  std::unordered_set<std::string> seen_ids;

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(name, line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object()) fail(name, line_no, "record must be a JSON object");

    Interaction item;
    item.id = require_string(record, "id", name, line_no);
    item.student_id =
        record.contains("student_id") ? require_string(record, "student_id", name, line_no)
                                      : std::string("anonymous");
    item.question = require_string(record, "question", name, line_no);
    item.solution = require_string(record, "solution", name, line_no);
    item.student_answer = require_string(record, "student_answer", name, line_no);
    item.label = parse_label(record, name, line_no);

    if (item.id.empty()) fail(name, line_no, "empty id");
    if (item.question.empty()) fail(name, line_no, "empty question");
    if (item.solution.empty()) fail(name, line_no, "empty solution");
    if (item.student_answer.empty()) fail(name, line_no, "empty student_answer");
    if (!seen_ids.insert(item.id).second)
      fail(name, line_no, "duplicate id \"" + item.id + "\"");

    dataset.items.push_back(std::move(item));
  }

  if (dataset.items.empty()) throw LoadError(name + ": dataset is empty");
  return dataset;
}

Dataset load_dataset(const std::filesystem::path& path, std::string_view format) {
  if (format != "jsonl")
    throw LoadError("unknown dataset format \"" + std::string(format) + "\"");
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open dataset file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset(buffer.str(), path.filename().string());
}

std::string dataset_to_jsonl(const Dataset& dataset) {
  std::string out;
  for (const auto& item : dataset.items) {
    json record;
    record["id"] = item.id;
    record["student_id"] = item.student_id;
    record["question"] = item.question;
    record["solution"] = item.solution;
    record["student_answer"] = item.student_answer;
    record["label"] = label_to_int(item.label);
    out += record.dump();
    out += '\n';
  }
  return out;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write dataset file " + path.string());
  out << dataset_to_jsonl(dataset);
}

}  // namespace gradeprobe
