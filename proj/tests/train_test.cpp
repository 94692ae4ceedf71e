#include "cfgevade/train.hpp"

#include <vector>

#include "gtest/gtest.h"
#include "support/test_util.hpp"

namespace cfgevade {
namespace {

using testing::TinyConfig;

// Benign samples draw from the low half of the vocabulary, malicious ones from
// the high half, so the task is learnable by a tiny model.
std::vector<TokenizedSample> SeparableCorpus(const ModelConfig& cfg, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TokenizedSample> out;
  const std::size_t half = (cfg.vocab_size - kNumSpecials) / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const Label label = i % 2 ? Label::Malicious : Label::Benign;
    TokenizedSample s;
    s.name = "s" + std::to_string(i);
    s.label = label;
    s.ids.assign(cfg.max_positions, kPadId);
    s.mask.assign(cfg.max_positions, 0);
    s.ids[0] = kClsId;
    s.mask[0] = 1;
    const std::size_t len = 2 + rng.below(cfg.max_positions - 2);
    for (std::size_t k = 1; k <= len; ++k) {
      const auto offset = label == Label::Malicious ? half : 0;
      s.ids[k] = static_cast<TokenId>(kNumSpecials + offset + rng.below(half));
      s.mask[k] = 1;
    }
    out.push_back(std::move(s));
  }
  return out;
}

TEST(EvalMetrics, Arithmetic) {
  const auto m = EvalMetrics::from_counts(0, 96, 4, 0);
  EXPECT_DOUBLE_EQ(m.fpr, 0.04);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.96);
  const auto no_benign = EvalMetrics::from_counts(7, 0, 0, 3);
  EXPECT_EQ(no_benign.fpr, 0.0);
  EXPECT_DOUBLE_EQ(no_benign.accuracy, 0.7);
}

TEST(Train, SameSeedIsBitwiseReproducible) {
  const auto cfg = TinyConfig();
  const auto corpus = SeparableCorpus(cfg, 40, 1);
  TrainConfig t;
  t.epochs = 3;
  t.batch_size = 8;
  t.seed = 5;
  const auto a = train(corpus, t, cfg);
  const auto b = train(corpus, t, cfg);
  EXPECT_TRUE(a.params == b.params);
  ASSERT_EQ(a.log.size(), 3u);
  for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].train_loss, b.log[i].train_loss);

  t.threads = 3;
  EXPECT_TRUE(train(corpus, t, cfg).params == a.params);

  t.threads = 1;
  t.seed = 6;
  EXPECT_FALSE(train(corpus, t, cfg).params == a.params);
}

TEST(Train, OverfitsTinyCorpus) {
  const auto cfg = TinyConfig();
  const auto corpus = SeparableCorpus(cfg, 12, 2);
  TrainConfig t;
  t.epochs = 200;
  t.batch_size = 16;  // one step per epoch
  t.learning_rate = 1e-2;
  t.seed = 3;
  std::size_t calls = 0;
  const auto r = train(corpus, t, cfg, [&](const EpochLog& e) { EXPECT_EQ(e.epoch, ++calls); });
  EXPECT_EQ(calls, 200u);
  EXPECT_LT(r.log.back().train_loss, 0.05);
  EXPECT_LT(r.log.back().train_loss, r.log.front().train_loss);
}

TEST(Train, RequiresBothClasses) {
  const auto cfg = TinyConfig();
  auto corpus = SeparableCorpus(cfg, 10, 3);
  for (auto& s : corpus) s.label = Label::Benign;
  EXPECT_THROW(train(corpus, TrainConfig{}, cfg), DegenerateCorpus);
  corpus[0].label.reset();
  EXPECT_THROW(train(corpus, TrainConfig{}, cfg), UnlabeledSample);
}

TEST(Evaluate, ThreadCountInvariant) {
  const auto cfg = TinyConfig();
  const auto corpus = SeparableCorpus(cfg, 30, 4);
  const auto p = testing::RandomParams(cfg, 4);
  const auto a = evaluate(p, cfg, corpus, 1);
  const auto b = evaluate(p, cfg, corpus, 4);
  EXPECT_EQ(a.tp, b.tp);
  EXPECT_EQ(a.tn, b.tn);
  EXPECT_EQ(a.tp + a.tn + a.fp + a.fn, 30u);
}

}  // namespace
}  // namespace cfgevade
