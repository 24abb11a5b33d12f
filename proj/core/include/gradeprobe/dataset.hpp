#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gradeprobe/labels.hpp"

namespace gradeprobe {

/// One student answer to one question together with its ground-truth grade.
struct Interaction {
  std::string id;
  std::string student_id;
  std::string question;
  std::string solution;
  std::string student_answer;
  GradeLabel label = GradeLabel::Incorrect;

  bool operator==(const Interaction&) const = default;
};

/// Ordered collection of interactions. Iteration order is file order.
/// Immutable after load; safe to share read-only across workers.
struct Dataset {
  std::string name;
  std::vector<Interaction> items;

  std::size_t size() const { return items.size(); }
  bool operator==(const Dataset&) const = default;
};

/// Loads a dataset. "jsonl" (one record per line with fields {id,
/// student_id, question, solution, student_answer, label}, label in {0,1})
/// is the only format currently registered. student_id may be omitted and
/// defaults to "anonymous". Throws LoadError naming the offending line on
/// missing fields, duplicate ids, unparseable labels, or empty text fields,
/// and on an unknown format id.
Dataset load_dataset(const std::filesystem::path& path, std::string_view format = "jsonl");

/// Parses the same JSONL format from an in-memory string.
Dataset parse_dataset(const std::string& text, const std::string& name);

/// Serializes back to the JSONL format accepted by load_dataset.
std::string dataset_to_jsonl(const Dataset& dataset);

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

}  // namespace gradeprobe
