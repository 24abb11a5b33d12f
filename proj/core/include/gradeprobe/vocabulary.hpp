#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gradeprobe {

/// Ordered sequence of vocabulary indices (an attack suffix, usually).
struct TokenSeq {
  std::vector<std::int32_t> ids;

  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
  bool operator==(const TokenSeq&) const = default;
};

/// Lowercasing word/punctuation tokenizer. Runs of [a-z0-9_] form one token,
/// every other non-space byte is a single-character token, whitespace
/// separates.
std::vector<std::string> tokenize_words(std::string_view text);

/// Fixed token inventory with a reserved out-of-vocabulary bucket.
///
/// Every token string must be atomic under tokenize_words (it tokenizes to
/// exactly itself), so decoded suffixes re-encode to the same ids.
class Vocabulary {
public:
  static Vocabulary from_tokens(std::vector<std::string> tokens, std::size_t oov_index);

  std::size_t size() const { return tokens_.size(); }
  std::size_t oov_index() const { return oov_index_; }

  /// Throws DomainError when index is out of range.
  const std::string& token(std::size_t index) const;

  std::optional<std::size_t> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }

  /// Tokenizes and encodes; unknown words map to the OOV bucket.
  std::vector<std::int32_t> encode_text(std::string_view text) const;

  /// Space-joins the token strings of a sequence. Throws DomainError on an
  /// out-of-range index.
  std::string decode_joined(const TokenSeq& seq) const;

  /// True when every index of the sequence is valid for this vocabulary.
  bool covers(const TokenSeq& seq) const;

private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t oov_index_ = 0;
};

}  // namespace gradeprobe
