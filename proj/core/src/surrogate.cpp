#include "gradeprobe/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "gradeprobe/errors.hpp"

namespace gradeprobe {

namespace {

double stable_softplus(double x) {
  // log(1 + e^x) without overflow.
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

}  // namespace

SurrogateGrader::SurrogateGrader(Vocabulary vocab, SurrogateSpec spec)
    : vocab_(std::move(vocab)), spec_(std::move(spec)) {
  if (spec_.dims == 0) throw ConfigError("surrogate: dims must be >= 1");
  if (!(spec_.noise_scale >= 0.0)) throw ConfigError("surrogate: noise_scale must be >= 0");

  std::map<std::string, double> planted = spec_.rules;
  for (const auto& [token, weight] : spec_.vulnerable_tokens) planted[token] += weight;
  for (const auto& [token, weight] : planted) {
    (void)weight;
    if (!vocab_.contains(token))
      throw ConfigError("surrogate: planted keyword \"" + token + "\" not in vocabulary");
  }

  const std::size_t v = vocab_.size();
  const std::size_t d = spec_.dims;
  std::mt19937_64 rng(spec_.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  head_.resize(d);
  double norm_sq = 0.0;
  for (auto& w : head_) {
    w = normal(rng);
    norm_sq += w * w;
  }
  if (norm_sq == 0.0) head_[0] = 1.0, norm_sq = 1.0;
  const double inv_norm = 1.0 / std::sqrt(norm_sq);
  for (auto& w : head_) w *= inv_norm;

  embeddings_.assign(v * d, 0.0);
  token_weights_.assign(v, 0.0);
  for (std::size_t row = 0; row < v; ++row) {
    double* e = embeddings_.data() + row * d;
    double dot = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      e[k] = normal(rng) * spec_.noise_scale;
      dot += e[k] * head_[k];
    }
    // Remove the head component of the noise, then plant the exact weight.
    auto it = planted.find(vocab_.token(row));
    const double weight = it == planted.end() ? 0.0 : it->second;
    for (std::size_t k = 0; k < d; ++k) e[k] += (weight - dot) * head_[k];
    token_weights_[row] = weight;
  }
}

std::span<const double> SurrogateGrader::embedding(std::size_t token_index) const {
  if (token_index >= vocab_.size())
    throw DomainError("surrogate: embedding index out of range");
  return {embeddings_.data() + token_index * spec_.dims, spec_.dims};
}

double SurrogateGrader::token_logit_weight(std::size_t token_index) const {
  if (token_index >= vocab_.size())
    throw DomainError("surrogate: token index out of range");
  return token_weights_[token_index];
}

double SurrogateGrader::logit_of_ids(std::span<const std::int32_t> ids) const {
  if (ids.empty()) return spec_.bias;
  double sum = 0.0;
  for (auto id : ids) sum += token_weights_[static_cast<std::size_t>(id)];
  return sum / static_cast<double>(ids.size()) + spec_.bias;
}

double SurrogateGrader::loss_from_logit(double logit, GradeLabel target) const {
  // -log p(target); p(Correct) = logistic(logit).
  return target == GradeLabel::Correct ? stable_softplus(-logit) : stable_softplus(logit);
}

double SurrogateGrader::probability_correct(const std::string& prompt_text) const {
  const auto ids = vocab_.encode_text(prompt_text);
  const double z = logit_of_ids(ids);
  const double p = 1.0 / (1.0 + std::exp(-z));
  // Strictly inside (0,1) even where the logistic saturates in doubles.
  return std::clamp(p, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

GradeOutcome SurrogateGrader::grade(const std::string& prompt_text) const {
  const double p = probability_correct(prompt_text);
  GradeOutcome outcome;
  outcome.label = p >= 0.5 ? GradeLabel::Correct : GradeLabel::Incorrect;
  outcome.raw_text = std::string("Result: ") + std::string(label_name(*outcome.label));
  outcome.score = p;
  return outcome;
}

double SurrogateGrader::loss(const std::string& prompt_text, GradeLabel target) const {
  const auto ids = vocab_.encode_text(prompt_text);
  return loss_from_logit(logit_of_ids(ids), target);
}

double SurrogateGrader::suffix_loss(const std::string& base_text, const TokenSeq& suffix,
                                    GradeLabel target) const {
  if (!vocab_.covers(suffix))
    throw DomainError("surrogate: suffix indexes outside the vocabulary");
  auto ids = vocab_.encode_text(base_text);
  ids.insert(ids.end(), suffix.ids.begin(), suffix.ids.end());
  return loss_from_logit(logit_of_ids(ids), target);
}

GradientMatrix SurrogateGrader::suffix_gradient(const std::string& base_text,
                                                const TokenSeq& suffix,
                                                GradeLabel target) const {
  if (suffix.empty()) throw DomainError("surrogate: suffix_gradient needs a non-empty suffix");
  if (!vocab_.covers(suffix))
    throw DomainError("surrogate: suffix indexes outside the vocabulary");

  auto ids = vocab_.encode_text(base_text);
  ids.insert(ids.end(), suffix.ids.begin(), suffix.ids.end());
  const double z = logit_of_ids(ids);
  const double p = 1.0 / (1.0 + std::exp(-z));
  const double y = target == GradeLabel::Correct ? 1.0 : 0.0;
  const double scale = (p - y) / static_cast<double>(ids.size());

  // Mean pooling is position-symmetric, so every row carries the same
  // pattern scale * (head . embedding(v)).
  GradientMatrix grad;
  grad.rows = suffix.size();
  grad.cols = vocab_.size();
  grad.values.resize(grad.rows * grad.cols);
  for (std::size_t v = 0; v < grad.cols; ++v) grad.values[v] = scale * token_weights_[v];
  for (std::size_t r = 1; r < grad.rows; ++r) {
    std::copy(grad.values.begin(), grad.values.begin() + static_cast<std::ptrdiff_t>(grad.cols),
              grad.values.begin() + static_cast<std::ptrdiff_t>(r * grad.cols));
  }
  return grad;
}

SurrogateGrader plant_surrogate(Vocabulary vocab, SurrogateSpec spec) {
  return SurrogateGrader(std::move(vocab), std::move(spec));
}

}  // namespace gradeprobe
