#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cfgevade/attribution.hpp"
#include "cfgevade/error.hpp"
#include "cfgevade/graph.hpp"
#include "cfgevade/parallel.hpp"
#include "cfgevade/rng.hpp"
#include "cfgevade/tokenizer.hpp"

namespace cfgevade {

inline constexpr std::string_view kImportAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
inline constexpr std::size_t kImportNameLength = 10;
inline constexpr std::string_view kImportPrefix = "sym.imp.";
inline constexpr std::string_view kImportSuffix = ".dll";

// "sym.imp.<10 chars from A-Z0-9>.dll", modelling a function moved out to a DLL.
inline std::string gen_import_name(Rng& rng) {
  std::string name(kImportPrefix);
  for (std::size_t i = 0; i < kImportNameLength; ++i) {
    name += kImportAlphabet[rng.below(kImportAlphabet.size())];
  }
  name += kImportSuffix;
  return name;
}

// Every character a synthetic import can contain; pass to build_vocab so the
// tokenizer can always represent replacements.
inline std::string import_name_charset() {
  return std::string(kImportPrefix) + std::string(kImportAlphabet) + std::string(kImportSuffix);
}

struct AttackConfig {
  std::size_t rounds = 1;
  std::size_t sample_limit = 2500;
  std::size_t trials = 3;
  std::size_t ig_steps = kDefaultIgSteps;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  void validate() const {
    if (rounds < 1) throw ConfigError("rounds must be >= 1");
    if (sample_limit < 1) throw ConfigError("sample limit must be >= 1");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (ig_steps < 1) throw ConfigError("IG steps must be >= 1");
  }
};

enum class AttackStatus { Success, Failure, Unimprovable };

inline std::string_view to_string(AttackStatus s) {
  switch (s) {
    case AttackStatus::Success: return "success";
    case AttackStatus::Failure: return "failure";
    case AttackStatus::Unimprovable: return "unimprovable";
  }
  return "?";
}

struct Replacement {
  std::string original;
  std::string replacement;
  double attribution = 0.0;  // word score that triggered the replacement
};

struct AttackOutcome {
  std::string sample;
  AttackStatus status = AttackStatus::Failure;
  std::size_t rounds_used = 0;
  // history[0] is the input; history[i] = A(history[i-1]).
  std::vector<std::vector<std::string>> history;
  std::vector<std::vector<Replacement>> replacements;  // one entry per executed round
  double final_p_malicious = 0.0;
};

namespace detail {

template <EmbeddingClassifier C>
double p_malicious(const C& model, const TokenizedSample& s) {
  return softmax(model.logits(model.embed(s), s.mask))[1];
}

}  // namespace detail

// Multi-round explainability-guided replacement on one detected malicious
// sample. Each round: attribute the current sequence, replace every distinct
// positively attributed function (all of its call sites) with one fresh
// synthetic import, re-classify; stop on the first benign verdict.
template <EmbeddingClassifier C>
AttackOutcome attack_sample(const C& model, const Vocab& vocab, std::size_t max_tokens,
                            const FunctionSequence& seq, const AttackConfig& cfg, Rng& rng) {
  if (seq.label != Label::Malicious) {
    throw NotMalicious("sample '" + seq.name + "' is not labeled malicious");
  }
  AttackOutcome out;
  out.sample = seq.name;
  out.history.push_back(seq.calls);
  const double p0 = detail::p_malicious(model, encode_sequence(vocab, seq, max_tokens));
  if (p0 < 0.5) throw NotMalicious("sample '" + seq.name + "' is already classified benign");
  out.final_p_malicious = p0;

  FunctionSequence current = seq;
  for (std::size_t round = 0; round < cfg.rounds; ++round) {
    const TokenizedSample encoded = encode_sequence(vocab, current, max_tokens);
    const auto tokens = integrated_gradients(model, encoded, cfg.ig_steps);
    const auto words = word_attributions(tokens, encoded.word_map);
    const auto positive = positive_words(words);
    if (positive.empty()) {
      out.status = round == 0 ? AttackStatus::Unimprovable : AttackStatus::Failure;
      out.rounds_used = round;
      return out;
    }

    // One import per distinct function, applied to every call site. The
    // logged score is that of the first positively attributed occurrence.
    std::vector<Replacement> round_log;
    std::unordered_map<std::string, std::size_t> seen;
    for (const auto& w : positive) {
      if (seen.contains(w.word)) continue;
      seen.emplace(w.word, round_log.size());
      round_log.push_back({w.word, gen_import_name(rng), w.score});
    }
    for (auto& call : current.calls) {
      if (auto it = seen.find(call); it != seen.end()) call = round_log[it->second].replacement;
    }
    out.history.push_back(current.calls);
    out.replacements.push_back(std::move(round_log));

    out.final_p_malicious = detail::p_malicious(model, encode_sequence(vocab, current, max_tokens));
    if (out.final_p_malicious < 0.5) {
      out.status = AttackStatus::Success;
      out.rounds_used = round + 1;
      return out;
    }
  }
  out.status = AttackStatus::Failure;
  out.rounds_used = cfg.rounds;
  return out;
}

// Counters for one trial: a_a attacked, a_i attacked minus unimprovable,
// a_s successes. s_n is undefined when a_i = 0.
struct TrialStats {
  std::size_t a_a = 0;
  std::size_t a_i = 0;
  std::size_t a_s = 0;
  std::size_t skipped_benign = 0;  // drawn malicious samples the model already missed
  double s_g = 0.0;
  std::optional<double> s_n;

  static TrialStats from_counts(std::size_t attempted, std::size_t improvable, std::size_t successes,
                                std::size_t skipped = 0) {
    if (!(successes <= improvable && improvable <= attempted)) {
      throw DataError("counters must satisfy a_s <= a_i <= a_a");
    }
    TrialStats t;
    t.a_a = attempted;
    t.a_i = improvable;
    t.a_s = successes;
    t.skipped_benign = skipped;
    t.s_g = attempted ? static_cast<double>(successes) / static_cast<double>(attempted) : 0.0;
    if (improvable) t.s_n = static_cast<double>(successes) / static_cast<double>(improvable);
    return t;
  }
};

inline TrialStats tally(const std::vector<AttackOutcome>& outcomes, std::size_t skipped = 0) {
  std::size_t unimprovable = 0, success = 0;
  for (const auto& o : outcomes) {
    unimprovable += o.status == AttackStatus::Unimprovable;
    success += o.status == AttackStatus::Success;
  }
  return TrialStats::from_counts(outcomes.size(), outcomes.size() - unimprovable, success, skipped);
}

inline double mean_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct CampaignStats {
  std::size_t rounds = 0;
  std::vector<TrialStats> trials;
  double mean_s_g = 0.0, median_s_g = 0.0;
  double mean_a_i = 0.0, median_a_i = 0.0;
  // Over trials where s_n is defined; absent if it is defined in none.
  std::optional<double> mean_s_n, median_s_n;

  static CampaignStats aggregate(std::size_t rounds, std::vector<TrialStats> trials) {
    CampaignStats c;
    c.rounds = rounds;
    c.trials = std::move(trials);
    std::vector<double> sg, ai, sn;
    for (const auto& t : c.trials) {
      sg.push_back(t.s_g);
      ai.push_back(static_cast<double>(t.a_i));
      if (t.s_n) sn.push_back(*t.s_n);
    }
    c.mean_s_g = mean_of(sg);
    c.median_s_g = median_of(sg);
    c.mean_a_i = mean_of(ai);
    c.median_a_i = median_of(ai);
    if (!sn.empty()) {
      c.mean_s_n = mean_of(sn);
      c.median_s_n = median_of(sn);
    }
    return c;
  }
};

struct CampaignResult {
  CampaignStats stats;
  std::vector<std::vector<AttackOutcome>> outcomes;  // per trial, in attack order
};

// Per trial: shuffle the malicious samples with the trial's stream, skip the
// ones the model already calls benign, attack the first `sample_limit`
// detected ones. Every sample gets its own RNG stream keyed by (seed, trial,
// corpus index) so parallel and serial runs agree.
template <EmbeddingClassifier C>
CampaignResult run_campaign(const C& model, const Vocab& vocab, std::size_t max_tokens,
                            const std::vector<FunctionSequence>& corpus, const AttackConfig& cfg) {
  cfg.validate();
  std::vector<std::size_t> malicious;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!corpus[i].label) throw UnlabeledSample("sample '" + corpus[i].name + "' has no label");
    if (*corpus[i].label == Label::Malicious) malicious.push_back(i);
  }
  if (malicious.empty()) throw NoMaliciousSamples("corpus has no malicious samples");

  std::vector<std::uint8_t> detected(corpus.size(), 0);
  parallel_for(malicious.size(), cfg.threads, [&](std::size_t k) {
    const auto i = malicious[k];
    detected[i] = detail::p_malicious(model, encode_sequence(vocab, corpus[i], max_tokens)) >= 0.5;
  });

  CampaignResult result;
  std::vector<TrialStats> trials;
  for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
    const std::uint64_t trial_seed = derive_seed(cfg.seed, "campaign.trial", trial);
    std::vector<std::size_t> order = malicious;
    Rng draw(derive_seed(trial_seed, "draw"));
    draw.shuffle(order);

    std::vector<std::size_t> chosen;
    std::size_t skipped = 0;
    for (const auto i : order) {
      if (chosen.size() == cfg.sample_limit) break;
      if (detected[i]) chosen.push_back(i);
      else ++skipped;
    }

    std::vector<AttackOutcome> outcomes(chosen.size());
    parallel_for(chosen.size(), cfg.threads, [&](std::size_t k) {
      Rng rng(derive_seed(trial_seed, "sample", chosen[k]));
      outcomes[k] = attack_sample(model, vocab, max_tokens, corpus[chosen[k]], cfg, rng);
    });
    trials.push_back(tally(outcomes, skipped));
    result.outcomes.push_back(std::move(outcomes));
  }
  result.stats = CampaignStats::aggregate(cfg.rounds, std::move(trials));
  return result;
}

}  // namespace cfgevade
