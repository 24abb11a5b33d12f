#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "gradeprobe/grader.hpp"
#include "gradeprobe/vocabulary.hpp"

namespace gradeprobe {

/// Construction parameters for a planted surrogate grader. Rule keywords
/// steer the baseline grade; vulnerable tokens are the deliberately planted
/// attack surface. Weights are logit contributions before mean pooling.
struct SurrogateSpec {
  std::size_t dims = 16;
  std::uint64_t seed = 42;
  double bias = 0.0;
  double noise_scale = 0.05;
  std::map<std::string, double> rules;
  std::map<std::string, double> vulnerable_tokens;
};

/// Mean-pooled bag-of-embeddings classifier with a logistic head:
///   p(Correct) = logistic(head . meanpool(embeddings of prompt tokens) + bias)
/// The grade is Correct iff p >= 0.5. Embeddings of unplanted tokens are
/// orthogonal to the head, so each planted token contributes exactly its
/// weight to the pooled logit numerator. Immutable and safe to share across
/// threads.
class SurrogateGrader final : public GradingModel {
public:
  SurrogateGrader(Vocabulary vocab, SurrogateSpec spec);

  Capability capability() const override { return Capability::WhiteBox; }
  std::string name() const override { return "surrogate"; }

  GradeOutcome grade(const std::string& prompt_text) const override;
  double loss(const std::string& prompt_text, GradeLabel target) const override;
  double suffix_loss(const std::string& base_text, const TokenSeq& suffix,
                     GradeLabel target) const override;
  GradientMatrix suffix_gradient(const std::string& base_text, const TokenSeq& suffix,
                                 GradeLabel target) const override;
  const Vocabulary& vocab() const override { return vocab_; }

  double probability_correct(const std::string& prompt_text) const;

  // Introspection for oracles and reporting.
  const SurrogateSpec& spec() const { return spec_; }
  std::span<const double> embedding(std::size_t token_index) const;
  std::span<const double> head_weights() const { return head_; }
  double bias() const { return spec_.bias; }
  /// head . embedding(v), precomputed.
  double token_logit_weight(std::size_t token_index) const;

private:
  double logit_of_ids(std::span<const std::int32_t> ids) const;
  double loss_from_logit(double logit, GradeLabel target) const;

  Vocabulary vocab_;
  SurrogateSpec spec_;
  std::vector<double> head_;        // dims
  std::vector<double> embeddings_;  // |V| x dims, row-major
  std::vector<double> token_weights_;
};

/// Builds a surrogate with the given planted rules and vulnerable tokens.
/// Throws ConfigError when a keyword is missing from the vocabulary or the
/// spec is invalid. Construction is deterministic in the seed.
SurrogateGrader plant_surrogate(Vocabulary vocab, SurrogateSpec spec);

}  // namespace gradeprobe
