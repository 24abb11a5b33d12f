#include "gradeprobe/vocabulary.hpp"

#include <cctype>

#include "gradeprobe/errors.hpp"

namespace gradeprobe {

namespace {

bool is_word_char(unsigned char c) {
  return std::isalnum(c) != 0 || c == '_';
}

}  // namespace

std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      if (!current.empty()) {
        out.push_back(std::move(current));
        current.clear();
      }
      continue;
    }
    const unsigned char lower = static_cast<unsigned char>(std::tolower(c));
    if (is_word_char(lower)) {
      current.push_back(static_cast<char>(lower));
    } else {
      if (!current.empty()) {
        out.push_back(std::move(current));
        current.clear();
      }
      out.emplace_back(1, static_cast<char>(lower));
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens, std::size_t oov_index) {
  if (tokens.size() < 2) throw ConfigError("vocabulary needs at least 2 tokens");
  if (oov_index >= tokens.size()) throw ConfigError("oov index out of range");

  Vocabulary vocab;
  vocab.tokens_ = std::move(tokens);
  vocab.oov_index_ = oov_index;
  vocab.index_.reserve(vocab.tokens_.size());
  for (std::size_t i = 0; i < vocab.tokens_.size(); ++i) {
    const auto& tok = vocab.tokens_[i];
    if (tok.empty()) throw ConfigError("vocabulary token " + std::to_string(i) + " is empty");
    const auto pieces = tokenize_words(tok);
    if (pieces.size() != 1 || pieces.front() != tok)
      throw ConfigError("vocabulary token \"" + tok + "\" is not atomic under the tokenizer");
    if (!vocab.index_.emplace(tok, i).second)
      throw ConfigError("duplicate vocabulary token \"" + tok + "\"");
  }
  return vocab;
}

const std::string& Vocabulary::token(std::size_t index) const {
  if (index >= tokens_.size())
    throw DomainError("vocabulary index " + std::to_string(index) + " out of range");
  return tokens_[index];
}

std::optional<std::size_t> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::int32_t> Vocabulary::encode_text(std::string_view text) const {
  std::vector<std::int32_t> ids;
  for (const auto& word : tokenize_words(text)) {
    auto it = index_.find(word);
    ids.push_back(static_cast<std::int32_t>(it == index_.end() ? oov_index_ : it->second));
  }
  return ids;
}

std::string Vocabulary::decode_joined(const TokenSeq& seq) const {
  std::string out;
  for (std::size_t i = 0; i < seq.ids.size(); ++i) {
    if (i > 0) out += ' ';
    out += token(static_cast<std::size_t>(seq.ids[i]));
  }
  return out;
}

bool Vocabulary::covers(const TokenSeq& seq) const {
  for (auto id : seq.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) return false;
  }
  return true;
}

}  // namespace gradeprobe
