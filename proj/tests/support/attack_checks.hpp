#pragma once

// Fixtures shared by the attack unit tests and the acceptance run: a random
// tiny transformer world and an independent re-derivation of an attack
// outcome from its history.

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cfgevade/attack.hpp"
#include "support/linear_surrogate.hpp"
#include "support/test_util.hpp"

namespace cfgevade::testing {

// Short dotted names, a third benign, random weights.
struct RandomWorld {
  Vocab vocab;
  ModelConfig cfg;
  ModelParams params;
  std::vector<FunctionSequence> corpus;

  explicit RandomWorld(std::uint64_t seed, std::size_t n = 12) {
    Rng rng(seed);
    std::vector<std::string> names;
    for (int i = 0; i < 12; ++i) names.push_back("f" + std::to_string(i) + ".x");
    for (std::size_t k = 0; k < n; ++k) {
      FunctionSequence s{"s" + std::to_string(k), k % 3 ? Label::Malicious : Label::Benign, {"entry0"}};
      for (auto len = rng.between(2, 5); len > 0; --len) s.calls.push_back(names[rng.below(names.size())]);
      corpus.push_back(std::move(s));
    }
    vocab = build_vocab(corpus, 200, import_name_charset());
    cfg.vocab_size = vocab.size();
    cfg.d_model = 8;
    cfg.heads = 2;
    cfg.layers = 1;
    cfg.ff_dim = 16;
    cfg.max_positions = 48;
    params = RandomParams(cfg, seed, 0.8);
  }
};

// Vocab where every listed word is a whole token and import characters fall
// back to single-character tokens.
inline Vocab WordVocab(const std::vector<std::string>& words) {
  std::vector<FunctionSequence> seqs(3, FunctionSequence{"v", Label::Benign, words});
  return build_vocab(seqs, 4096, import_name_charset());
}

// Word weights on whole-word tokens; every character token weighs 0.
inline TokenWeightSurrogate Weighted(const Vocab& v, const std::map<std::string, double>& words, double bias) {
  TokenWeightSurrogate m(std::vector<double>(v.size(), 0.0), bias);
  for (const auto& [w, x] : words) m.weight(*v.find(w)) = x;
  return m;
}

// Recomputes every round of `out` from scratch and returns a description of
// the first violated rule, or "" if the outcome is consistent:
//   - each replaced name had strictly positive word attribution that round,
//     and every positive word was replaced;
//   - history[j+1] is history[j] with that round's mapping applied;
//   - Success iff re-classifying the final sequence gives p < 0.5.
template <EmbeddingClassifier C>
std::string CheckOutcome(const C& model, const Vocab& v, std::size_t t, const FunctionSequence& seq,
                         const AttackConfig& cfg, const AttackOutcome& out) {
  std::ostringstream err;
  if (out.history.empty() || out.history.front() != seq.calls) return "history[0] is not the input";
  if (out.history.size() != out.replacements.size() + 1) return "history and replacement ledger disagree";
  if (out.rounds_used > cfg.rounds) return "rounds_used exceeds the limit";
  for (std::size_t j = 0; j < out.replacements.size(); ++j) {
    const auto enc = encode_sequence(v, {seq.name, Label::Malicious, out.history[j]}, t);
    const auto words = word_attributions(integrated_gradients(model, enc, cfg.ig_steps), enc.word_map);
    std::map<std::string, std::string> mapping;
    for (const auto& r : out.replacements[j]) {
      mapping[r.original] = r.replacement;
      bool positive = false;
      for (const auto& w : words) positive |= w.word == r.original && w.score > 0.0;
      if (!positive || !(r.attribution > 0.0)) {
        err << "round " << j << ": '" << r.original << "' replaced without positive attribution";
        return err.str();
      }
    }
    for (const auto& w : positive_words(words)) {
      if (!mapping.contains(w.word)) {
        err << "round " << j << ": positive word '" << w.word << "' kept";
        return err.str();
      }
    }
    auto expected = out.history[j];
    for (auto& c : expected) {
      if (auto it = mapping.find(c); it != mapping.end()) c = it->second;
    }
    if (out.history[j + 1] != expected) {
      err << "round " << j << ": history does not follow the replacement map";
      return err.str();
    }
  }
  const auto last = encode_sequence(v, {seq.name, Label::Malicious, out.history.back()}, t);
  const double p = softmax(model.logits(model.embed(last), last.mask))[1];
  if (p != out.final_p_malicious) return "recorded final probability differs from re-classification";
  if ((out.status == AttackStatus::Success) != (p < 0.5)) return "status disagrees with re-classification";
  if (out.status == AttackStatus::Unimprovable && out.rounds_used != 0) return "unimprovable after round 0";
  if (out.status == AttackStatus::Success && out.rounds_used != out.replacements.size()) {
    return "success rounds_used does not match executed rounds";
  }
  return "";
}

}  // namespace cfgevade::testing
