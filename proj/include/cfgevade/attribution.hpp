#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfgevade/error.hpp"
#include "cfgevade/model.hpp"
#include "cfgevade/tokenizer.hpp"

namespace cfgevade {

inline constexpr std::size_t kDefaultIgSteps = 50;

// Anything that classifies from an embedding matrix and can differentiate
// its malicious logit with respect to that matrix.
template <typename C>
concept EmbeddingClassifier = requires(const C& c, const TokenizedSample& s, const Matrix& e,
                                       std::span<const std::uint8_t> mask) {
  { c.embed(s) } -> std::convertible_to<Matrix>;
  { c.baseline(s) } -> std::convertible_to<Matrix>;
  { c.logits(e, mask) } -> std::convertible_to<Logits>;
  { c.malicious_gradient(e, mask) } -> std::convertible_to<Matrix>;
};

// The transformer behind the EmbeddingClassifier interface. The baseline is
// [CLS] followed by [PAD] everywhere, with the sample's own position
// embeddings.
class TransformerClassifier {
 public:
  TransformerClassifier(const ModelParams& params, const ModelConfig& cfg)
      : params_(&params), cfg_(&cfg) {}

  Matrix embed(const TokenizedSample& s) const { return cfgevade::embed(*params_, *cfg_, s); }

  Matrix baseline(const TokenizedSample& s) const {
    TokenizedSample base = s;
    std::fill(base.ids.begin(), base.ids.end(), kPadId);
    if (!base.ids.empty()) base.ids[0] = kClsId;
    return cfgevade::embed(*params_, *cfg_, base);
  }

  Logits logits(const Matrix& emb, std::span<const std::uint8_t> mask) const {
    return forward_from_embeddings(*params_, *cfg_, emb, mask);
  }

  Matrix malicious_gradient(const Matrix& emb, std::span<const std::uint8_t> mask) const {
    return logit_gradient(*params_, *cfg_, emb, mask, 1);
  }

  Prediction predict(const TokenizedSample& s) const { return forward(*params_, *cfg_, s); }

 private:
  const ModelParams* params_;
  const ModelConfig* cfg_;
};

struct TokenScore {
  std::size_t position = 0;
  TokenId token = 0;
  double score = 0.0;
};

struct WordScore {
  std::string word;
  std::size_t start = 0;
  std::size_t end = 0;
  double score = 0.0;
};

struct AttributionReport {
  std::string sample;
  std::size_t target_class = 1;  // malicious
  std::vector<TokenScore> token_scores;
  std::vector<WordScore> word_scores;
  double target_input = 0.0;     // f(x)
  double target_baseline = 0.0;  // f(x')
  double completeness_gap = 0.0;
};

// Integrated gradients of the malicious logit over the embedding layer:
// IG_i = (x_i - x'_i) * mean over the path of df/dx_i, the mean taken with the
// trapezoidal rule on alpha = 0, 1/steps, ..., 1. Returns one score per
// position (sum over embedding components).
template <EmbeddingClassifier C>
std::vector<TokenScore> integrated_gradients(const C& model, const TokenizedSample& sample,
                                             std::size_t steps = kDefaultIgSteps) {
  if (steps < 1) throw ConfigError("integrated gradients needs steps >= 1");
  const Matrix x = model.embed(sample);
  const Matrix x0 = model.baseline(sample);
  const Matrix delta = x - x0;

  Matrix path_sum = Matrix::Zero(x.rows(), x.cols());
  for (std::size_t k = 0; k <= steps; ++k) {
    const double alpha = static_cast<double>(k) / static_cast<double>(steps);
    const Matrix point = x0 + alpha * delta;
    const double w = (k == 0 || k == steps) ? 0.5 : 1.0;
    path_sum += w * model.malicious_gradient(point, sample.mask);
  }
  const Matrix ig = delta.cwiseProduct(path_sum / static_cast<double>(steps));

  std::vector<TokenScore> out(sample.ids.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = {i, sample.ids[i], ig.row(static_cast<Eigen::Index>(i)).sum()};
  }
  return out;
}

// Sum of token scores over each word's span, in word_map order. Positions
// outside every span ([CLS], pads) contribute to no word.
inline std::vector<WordScore> word_attributions(std::span<const TokenScore> token_scores,
                                                std::span<const WordSpan> word_map) {
  std::vector<WordScore> out;
  out.reserve(word_map.size());
  for (const auto& span : word_map) {
    if (span.start >= span.end || span.end > token_scores.size()) {
      throw SpanOutOfRange("word '" + span.word + "' span [" + std::to_string(span.start) + "," +
                           std::to_string(span.end) + ") outside " +
                           std::to_string(token_scores.size()) + " token scores");
    }
    double sum = 0.0;
    for (std::size_t i = span.start; i < span.end; ++i) sum += token_scores[i].score;
    out.push_back({span.word, span.start, span.end, sum});
  }
  return out;
}

// Words with strictly positive attribution, order preserved.
inline std::vector<WordScore> positive_words(std::span<const WordScore> word_scores) {
  std::vector<WordScore> out;
  for (const auto& w : word_scores) {
    if (w.score > 0.0) out.push_back(w);
  }
  return out;
}

template <EmbeddingClassifier C>
AttributionReport explain(const C& model, const TokenizedSample& sample,
                          std::size_t steps = kDefaultIgSteps) {
  AttributionReport r;
  r.sample = sample.name;
  r.token_scores = integrated_gradients(model, sample, steps);
  r.word_scores = word_attributions(r.token_scores, sample.word_map);
  r.target_input = model.logits(model.embed(sample), sample.mask)[1];
  r.target_baseline = model.logits(model.baseline(sample), sample.mask)[1];
  double total = 0.0;
  for (const auto& t : r.token_scores) total += t.score;
  r.completeness_gap = std::abs(total - (r.target_input - r.target_baseline));
  return r;
}

inline nlohmann::ordered_json to_json(const AttributionReport& r) {
  nlohmann::ordered_json j;
  j["sample"] = r.sample;
  j["target_class"] = r.target_class == 1 ? "malicious" : "benign";
  j["target_input"] = r.target_input;
  j["target_baseline"] = r.target_baseline;
  j["completeness_gap"] = r.completeness_gap;
  j["tokens"] = nlohmann::ordered_json::array();
  for (const auto& t : r.token_scores) {
    j["tokens"].push_back({{"position", t.position}, {"token", t.token}, {"score", t.score}});
  }
  j["words"] = nlohmann::ordered_json::array();
  for (const auto& w : r.word_scores) {
    j["words"].push_back({{"word", w.word}, {"start", w.start}, {"end", w.end}, {"score", w.score}});
  }
  return j;
}

}  // namespace cfgevade
