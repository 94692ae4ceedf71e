#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cfgevade/corpus.hpp"
#include "cfgevade/error.hpp"
#include "cfgevade/model.hpp"
#include "cfgevade/parallel.hpp"
#include "cfgevade/rng.hpp"

namespace cfgevade {

struct EvalMetrics {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  double accuracy = 0.0;
  double fpr = 0.0;  // FP / (FP + TN), 0 when there are no benign samples

  static EvalMetrics from_counts(std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn) {
    EvalMetrics m{tp, tn, fp, fn, 0.0, 0.0};
    const std::size_t total = tp + tn + fp + fn;
    m.accuracy = total ? static_cast<double>(tp + tn) / static_cast<double>(total) : 0.0;
    m.fpr = (fp + tn) ? static_cast<double>(fp) / static_cast<double>(fp + tn) : 0.0;
    return m;
  }
};

// Malicious iff p(malicious) >= 0.5.
inline EvalMetrics evaluate(const ModelParams& params, const ModelConfig& cfg,
                            const std::vector<const TokenizedSample*>& samples,
                            std::size_t threads = 1) {
  std::vector<std::uint8_t> predicted(samples.size(), 0);
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    if (!samples[i]->label) throw UnlabeledSample("sample '" + samples[i]->name + "' has no label");
    predicted[i] = forward(params, cfg, *samples[i]).malicious() ? 1 : 0;
  });
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const bool truth = *samples[i]->label == Label::Malicious;
    if (predicted[i]) (truth ? tp : fp)++;
    else (truth ? fn : tn)++;
  }
  return EvalMetrics::from_counts(tp, tn, fp, fn);
}

inline EvalMetrics evaluate(const ModelParams& params, const ModelConfig& cfg,
                            const std::vector<TokenizedSample>& samples, std::size_t threads = 1) {
  std::vector<const TokenizedSample*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  return evaluate(params, cfg, ptrs, threads);
}

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t epochs = 5;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double train_fraction = 0.8;  // 4:1 train/eval
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  void validate() const {
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
      throw ConfigError("train fraction must lie in (0, 1)");
    }
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  }
};

class Adam {
 public:
  Adam(const ModelParams& like, const TrainConfig& cfg) : cfg_(cfg) {
    like.for_each([&](const std::string&, const Matrix& p) {
      m_.push_back(Matrix::Zero(p.rows(), p.cols()));
      v_.push_back(Matrix::Zero(p.rows(), p.cols()));
    });
  }

  void step(ModelParams& params, const ModelParams& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    std::vector<const Matrix*> g;
    grads.for_each([&](const std::string&, const Matrix& m) { g.push_back(&m); });
    std::size_t k = 0;
    params.for_each([&](const std::string&, Matrix& p) {
      Matrix& m = m_[k];
      Matrix& v = v_[k];
      const Matrix& gk = *g[k];
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * gk;
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * gk.cwiseProduct(gk);
      p.array() -= cfg_.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg_.adam_eps);
      ++k;
    });
  }

 private:
  TrainConfig cfg_;
  std::vector<Matrix> m_, v_;
  std::uint64_t t_ = 0;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  EvalMetrics eval;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochLog> log;
  TrainEvalSplit split;
};

// Splits `corpus` by train_fraction, trains with Adam on shuffled minibatches
// and evaluates on the held-out part after every epoch.
inline TrainResult train(const std::vector<TokenizedSample>& corpus, const TrainConfig& tcfg,
                         const ModelConfig& mcfg,
                         const std::function<void(const EpochLog&)>& on_epoch = {}) {
  tcfg.validate();
  mcfg.validate();
  bool has_benign = false, has_malicious = false;
  for (const auto& s : corpus) {
    if (!s.label) throw UnlabeledSample("sample '" + s.name + "' has no label");
    (*s.label == Label::Malicious ? has_malicious : has_benign) = true;
  }
  if (!has_benign || !has_malicious) throw DegenerateCorpus("training needs both classes");

  TrainResult result;
  result.split = split_indices(corpus.size(), tcfg.train_fraction, tcfg.seed);
  result.params = ModelParams::initialize(mcfg, tcfg.seed);
  Adam adam(result.params, tcfg);

  std::vector<const TokenizedSample*> eval_set;
  for (const auto i : result.split.eval) eval_set.push_back(&corpus[i]);

  std::vector<std::size_t> order = result.split.train;
  for (std::size_t epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    Rng rng(derive_seed(tcfg.seed, "train.shuffle", epoch));
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += tcfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + tcfg.batch_size);
      std::vector<const TokenizedSample*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&corpus[order[i]]);
      auto lg = loss_and_grad(result.params, mcfg, batch, tcfg.threads);
      loss_sum += lg.loss * static_cast<double>(batch.size());
      adam.step(result.params, lg.grads);
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = order.empty() ? 0.0 : loss_sum / static_cast<double>(order.size());
    entry.eval = evaluate(result.params, mcfg, eval_set, tcfg.threads);
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  return result;
}

}  // namespace cfgevade
