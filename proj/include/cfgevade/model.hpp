#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cfgevade/error.hpp"
#include "cfgevade/parallel.hpp"
#include "cfgevade/rng.hpp"
#include "cfgevade/tokenizer.hpp"

namespace cfgevade {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr std::size_t kNumClasses = 2;

struct ModelConfig {
  std::size_t vocab_size = 2048;
  std::size_t d_model = 64;
  std::size_t max_positions = 128;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t ff_dim = 128;
  double ln_eps = 1e-5;

  std::size_t head_dim() const { return d_model / heads; }

  void validate() const {
    if (vocab_size < 1 || d_model < 1 || max_positions < 1 || layers < 1 || heads < 1 || ff_dim < 1) {
      throw ConfigError("model dimensions must all be >= 1");
    }
    if (d_model % heads != 0) throw ConfigError("d_model must be divisible by heads");
    if (!(ln_eps > 0.0)) throw ConfigError("layer-norm epsilon must be positive");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Row vectors (biases, layer-norm scale/shift) are stored as 1xN matrices so
// every tensor can be visited uniformly.
struct LayerParams {
  Matrix ln1_gamma, ln1_beta;
  Matrix w_q, b_q, w_k, b_k, w_v, b_v, w_o, b_o;
  Matrix ln2_gamma, ln2_beta;
  Matrix w_ff1, b_ff1, w_ff2, b_ff2;

  template <typename Self, typename Fn>
  static void visit(Self& self, Fn&& fn) {
    fn("ln1_gamma", self.ln1_gamma);
    fn("ln1_beta", self.ln1_beta);
    fn("w_q", self.w_q);
    fn("b_q", self.b_q);
    fn("w_k", self.w_k);
    fn("b_k", self.b_k);
    fn("w_v", self.w_v);
    fn("b_v", self.b_v);
    fn("w_o", self.w_o);
    fn("b_o", self.b_o);
    fn("ln2_gamma", self.ln2_gamma);
    fn("ln2_beta", self.ln2_beta);
    fn("w_ff1", self.w_ff1);
    fn("b_ff1", self.b_ff1);
    fn("w_ff2", self.w_ff2);
    fn("b_ff2", self.b_ff2);
  }
};

struct ModelParams {
  Matrix token_embedding;     // V x d
  Matrix position_embedding;  // T x d
  std::vector<LayerParams> layers;
  Matrix lnf_gamma, lnf_beta;  // final layer norm
  Matrix classifier_w;         // 2 x d
  Matrix classifier_b;         // 1 x 2

  // Visits every tensor in a fixed order: fn(name, tensor).
  template <typename Fn>
  void for_each(Fn&& fn) {
    visit_impl(*this, fn);
  }
  template <typename Fn>
  void for_each(Fn&& fn) const {
    visit_impl(*this, fn);
  }

  std::size_t num_values() const {
    std::size_t n = 0;
    for_each([&](const std::string&, const Matrix& m) { n += static_cast<std::size_t>(m.size()); });
    return n;
  }

  bool all_finite() const {
    bool ok = true;
    for_each([&](const std::string&, const Matrix& m) { ok = ok && m.allFinite(); });
    return ok;
  }

  // Zero-filled tensors with the shapes `cfg` implies.
  static ModelParams zeros(const ModelConfig& cfg) {
    cfg.validate();
    const auto d = static_cast<Eigen::Index>(cfg.d_model);
    const auto ff = static_cast<Eigen::Index>(cfg.ff_dim);
    ModelParams p;
    p.token_embedding = Matrix::Zero(static_cast<Eigen::Index>(cfg.vocab_size), d);
    p.position_embedding = Matrix::Zero(static_cast<Eigen::Index>(cfg.max_positions), d);
    p.layers.resize(cfg.layers);
    for (auto& l : p.layers) {
      l.ln1_gamma = l.ln1_beta = l.ln2_gamma = l.ln2_beta = Matrix::Zero(1, d);
      l.w_q = l.w_k = l.w_v = l.w_o = Matrix::Zero(d, d);
      l.b_q = l.b_k = l.b_v = l.b_o = Matrix::Zero(1, d);
      l.w_ff1 = Matrix::Zero(d, ff);
      l.b_ff1 = Matrix::Zero(1, ff);
      l.w_ff2 = Matrix::Zero(ff, d);
      l.b_ff2 = Matrix::Zero(1, d);
    }
    p.lnf_gamma = p.lnf_beta = Matrix::Zero(1, d);
    p.classifier_w = Matrix::Zero(static_cast<Eigen::Index>(kNumClasses), d);
    p.classifier_b = Matrix::Zero(1, static_cast<Eigen::Index>(kNumClasses));
    return p;
  }

  // Embeddings uniform in +-1/sqrt(d); projections uniform in +-1/sqrt(fan_in);
  // biases zero; layer-norm scales one.
  static ModelParams initialize(const ModelConfig& cfg, std::uint64_t seed) {
    ModelParams p = zeros(cfg);
    Rng rng(derive_seed(seed, "model.init"));
    auto fill = [&](Matrix& m, double bound) {
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
    };
    const double emb = 1.0 / std::sqrt(static_cast<double>(cfg.d_model));
    const double ff = 1.0 / std::sqrt(static_cast<double>(cfg.ff_dim));
    fill(p.token_embedding, emb);
    fill(p.position_embedding, emb);
    for (auto& l : p.layers) {
      l.ln1_gamma.setOnes();
      l.ln2_gamma.setOnes();
      fill(l.w_q, emb);
      fill(l.w_k, emb);
      fill(l.w_v, emb);
      fill(l.w_o, emb);
      fill(l.w_ff1, emb);
      fill(l.w_ff2, ff);
    }
    p.lnf_gamma.setOnes();
    fill(p.classifier_w, emb);
    return p;
  }

  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    std::vector<const Matrix*> ta, tb;
    a.for_each([&](const std::string&, const Matrix& m) { ta.push_back(&m); });
    b.for_each([&](const std::string&, const Matrix& m) { tb.push_back(&m); });
    if (ta.size() != tb.size()) return false;
    for (std::size_t i = 0; i < ta.size(); ++i) {
      if (ta[i]->rows() != tb[i]->rows() || ta[i]->cols() != tb[i]->cols() || *ta[i] != *tb[i]) {
        return false;
      }
    }
    return true;
  }

 private:
  template <typename Self, typename Fn>
  static void visit_impl(Self& self, Fn& fn) {
    fn(std::string("token_embedding"), self.token_embedding);
    fn(std::string("position_embedding"), self.position_embedding);
    for (std::size_t i = 0; i < self.layers.size(); ++i) {
      const std::string prefix = "layer" + std::to_string(i) + ".";
      LayerParams::visit(self.layers[i],
                         [&](const char* name, auto& m) { fn(prefix + name, m); });
    }
    fn(std::string("lnf_gamma"), self.lnf_gamma);
    fn(std::string("lnf_beta"), self.lnf_beta);
    fn(std::string("classifier_w"), self.classifier_w);
    fn(std::string("classifier_b"), self.classifier_b);
  }
};

using Logits = std::array<double, kNumClasses>;

struct Prediction {
  Logits logits{};
  std::array<double, kNumClasses> probabilities{};

  double p_malicious() const { return probabilities[1]; }
  bool malicious() const { return probabilities[1] >= 0.5; }
};

inline std::array<double, kNumClasses> softmax(const Logits& z) {
  const double m = std::max(z[0], z[1]);
  const double e0 = std::exp(z[0] - m);
  const double e1 = std::exp(z[1] - m);
  const double s = e0 + e1;
  return {e0 / s, e1 / s};
}

// Per-forward intermediates, kept for the backward pass. Only unmasked
// positions are carried: they are the only keys attention may see, and pad
// queries never reach the [CLS] output.
struct ForwardTrace {
  struct Layer {
    Matrix x_in;
    Matrix xhat1, h1;
    std::vector<double> rstd1;
    Matrix q, k, v;
    std::vector<Matrix> attention;  // per head, L x L, rows sum to one
    Matrix concat;
    Matrix x_mid;
    Matrix xhat2, h2;
    std::vector<double> rstd2;
    Matrix pre_act;
    Matrix act;
  };

  std::vector<std::size_t> positions;  // unmasked positions, ascending
  std::vector<Layer> layers;
  Matrix cls_xhat;
  double cls_rstd = 0.0;
  Matrix cls_norm;
  Logits logits{};
};

namespace detail {

inline Matrix layer_norm(const Matrix& x, const Matrix& gamma, const Matrix& beta, double eps,
                         Matrix& xhat, std::vector<double>& rstd) {
  const Eigen::Index rows = x.rows();
  xhat.resize(rows, x.cols());
  rstd.assign(static_cast<std::size_t>(rows), 0.0);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().mean();
    const double s = 1.0 / std::sqrt(var + eps);
    rstd[static_cast<std::size_t>(r)] = s;
    xhat.row(r) = (x.row(r).array() - mean) * s;
  }
  Matrix y = xhat.array().rowwise() * gamma.row(0).array();
  y.rowwise() += beta.row(0);
  return y;
}

// Returns dL/dx; accumulates into dgamma/dbeta when given.
inline Matrix layer_norm_backward(const Matrix& dy, const Matrix& xhat,
                                  const std::vector<double>& rstd, const Matrix& gamma,
                                  Matrix* dgamma, Matrix* dbeta) {
  if (dgamma) dgamma->row(0) += (dy.array() * xhat.array()).colwise().sum().matrix();
  if (dbeta) dbeta->row(0) += dy.colwise().sum();
  const Matrix dxhat = dy.array().rowwise() * gamma.row(0).array();
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double mean_d = dxhat.row(r).mean();
    const double mean_dx = (dxhat.row(r).array() * xhat.row(r).array()).mean();
    dx.row(r) = rstd[static_cast<std::size_t>(r)] *
                (dxhat.row(r).array() - mean_d - xhat.row(r).array() * mean_dx);
  }
  return dx;
}

inline Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
  Matrix y = x * w;
  y.rowwise() += b.row(0);
  return y;
}

inline void check_shapes(const ModelParams& params, const ModelConfig& cfg, const Matrix& emb,
                         std::span<const std::uint8_t> mask) {
  const auto d = static_cast<Eigen::Index>(cfg.d_model);
  if (params.layers.size() != cfg.layers || params.token_embedding.cols() != d ||
      params.token_embedding.rows() != static_cast<Eigen::Index>(cfg.vocab_size) ||
      params.position_embedding.rows() != static_cast<Eigen::Index>(cfg.max_positions)) {
    throw ShapeMismatch("parameters do not match the model config");
  }
  if (emb.cols() != d || static_cast<std::size_t>(emb.rows()) != mask.size()) {
    throw ShapeMismatch("embeddings must be mask.size() x d_model");
  }
  if (mask.size() > cfg.max_positions) throw ShapeMismatch("sequence longer than max positions");
  if (mask.empty() || mask[0] == 0) throw ShapeMismatch("position 0 ([CLS]) must be unmasked");
}

}  // namespace detail

// Token + position embeddings for every position of the sample, pads included.
inline Matrix embed(const ModelParams& params, const ModelConfig& cfg, const TokenizedSample& sample) {
  if (sample.ids.size() != sample.mask.size() || sample.ids.size() > cfg.max_positions) {
    throw ShapeMismatch("sample length does not fit the model");
  }
  Matrix out(static_cast<Eigen::Index>(sample.ids.size()), static_cast<Eigen::Index>(cfg.d_model));
  for (std::size_t i = 0; i < sample.ids.size(); ++i) {
    const TokenId id = sample.ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= cfg.vocab_size) {
      throw ShapeMismatch("token id " + std::to_string(id) + " outside the vocab");
    }
    const auto r = static_cast<Eigen::Index>(i);
    out.row(r) = params.token_embedding.row(id) + params.position_embedding.row(r);
  }
  return out;
}

// Pre-norm encoder: x += MHA(LN1(x)); x += FFN(LN2(x)); logits from LNf(x[CLS]).
inline ForwardTrace forward_trace(const ModelParams& params, const ModelConfig& cfg,
                                  const Matrix& embeddings, std::span<const std::uint8_t> mask) {
  detail::check_shapes(params, cfg, embeddings, mask);
  ForwardTrace t;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) t.positions.push_back(i);
  }
  const auto len = static_cast<Eigen::Index>(t.positions.size());
  const auto dh = static_cast<Eigen::Index>(cfg.head_dim());
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix x(len, static_cast<Eigen::Index>(cfg.d_model));
  for (Eigen::Index r = 0; r < len; ++r) {
    x.row(r) = embeddings.row(static_cast<Eigen::Index>(t.positions[static_cast<std::size_t>(r)]));
  }

  t.layers.resize(cfg.layers);
  for (std::size_t li = 0; li < cfg.layers; ++li) {
    const LayerParams& p = params.layers[li];
    ForwardTrace::Layer& c = t.layers[li];
    c.x_in = x;
    c.h1 = detail::layer_norm(x, p.ln1_gamma, p.ln1_beta, cfg.ln_eps, c.xhat1, c.rstd1);
    c.q = detail::affine(c.h1, p.w_q, p.b_q);
    c.k = detail::affine(c.h1, p.w_k, p.b_k);
    c.v = detail::affine(c.h1, p.w_v, p.b_v);
    c.concat.resize(len, x.cols());
    c.attention.resize(cfg.heads);
    for (std::size_t h = 0; h < cfg.heads; ++h) {
      const auto off = static_cast<Eigen::Index>(h) * dh;
      Matrix scores = (c.q.middleCols(off, dh) * c.k.middleCols(off, dh).transpose()) * scale;
      for (Eigen::Index r = 0; r < len; ++r) {
        const double m = scores.row(r).maxCoeff();
        scores.row(r) = (scores.row(r).array() - m).exp();
        scores.row(r) /= scores.row(r).sum();
      }
      c.concat.middleCols(off, dh) = scores * c.v.middleCols(off, dh);
      c.attention[h] = std::move(scores);
    }
    c.x_mid = x + detail::affine(c.concat, p.w_o, p.b_o);
    c.h2 = detail::layer_norm(c.x_mid, p.ln2_gamma, p.ln2_beta, cfg.ln_eps, c.xhat2, c.rstd2);
    c.pre_act = detail::affine(c.h2, p.w_ff1, p.b_ff1);
    c.act = c.pre_act.cwiseMax(0.0);
    x = c.x_mid + detail::affine(c.act, p.w_ff2, p.b_ff2);
  }

  std::vector<double> rstd;
  const Matrix cls = x.topRows(1);
  t.cls_norm = detail::layer_norm(cls, params.lnf_gamma, params.lnf_beta, cfg.ln_eps, t.cls_xhat, rstd);
  t.cls_rstd = rstd[0];
  const Matrix z = detail::affine(t.cls_norm, params.classifier_w.transpose(), params.classifier_b);
  t.logits = {z(0, 0), z(0, 1)};
  return t;
}

// Reverse pass for dL/dlogits. Accumulates parameter gradients into `grads`
// (when non-null) except the embedding tables, and returns dL/dembeddings
// as a (mask.size() x d) matrix, zero on masked rows.
inline Matrix backward(const ModelParams& params, const ModelConfig& cfg, const ForwardTrace& t,
                       std::size_t seq_len, const Logits& dlogits, ModelParams* grads) {
  const auto len = static_cast<Eigen::Index>(t.positions.size());
  const auto d = static_cast<Eigen::Index>(cfg.d_model);
  const auto dh = static_cast<Eigen::Index>(cfg.head_dim());
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix dz(1, 2);
  dz << dlogits[0], dlogits[1];
  if (grads) {
    grads->classifier_w += dz.transpose() * t.cls_norm;
    grads->classifier_b += dz;
  }
  const Matrix dcls_norm = dz * params.classifier_w;
  const std::vector<double> cls_rstd{t.cls_rstd};
  const Matrix dcls = detail::layer_norm_backward(dcls_norm, t.cls_xhat, cls_rstd, params.lnf_gamma,
                                                  grads ? &grads->lnf_gamma : nullptr,
                                                  grads ? &grads->lnf_beta : nullptr);
  Matrix dx = Matrix::Zero(len, d);
  dx.topRows(1) = dcls;

  for (std::size_t li = cfg.layers; li-- > 0;) {
    const LayerParams& p = params.layers[li];
    const ForwardTrace::Layer& c = t.layers[li];
    LayerParams* g = grads ? &grads->layers[li] : nullptr;

    // feed-forward block
    const Matrix& dff = dx;
    if (g) {
      g->w_ff2 += c.act.transpose() * dff;
      g->b_ff2.row(0) += dff.colwise().sum();
    }
    Matrix dpre = dff * p.w_ff2.transpose();
    dpre = (c.pre_act.array() > 0.0).select(dpre, 0.0);
    if (g) {
      g->w_ff1 += c.h2.transpose() * dpre;
      g->b_ff1.row(0) += dpre.colwise().sum();
    }
    const Matrix dh2 = dpre * p.w_ff1.transpose();
    Matrix dx_mid = dx + detail::layer_norm_backward(dh2, c.xhat2, c.rstd2, p.ln2_gamma,
                                                     g ? &g->ln2_gamma : nullptr,
                                                     g ? &g->ln2_beta : nullptr);

    // attention block
    if (g) {
      g->w_o += c.concat.transpose() * dx_mid;
      g->b_o.row(0) += dx_mid.colwise().sum();
    }
    const Matrix dconcat = dx_mid * p.w_o.transpose();
    Matrix dq(len, d), dk(len, d), dv(len, d);
    for (std::size_t h = 0; h < cfg.heads; ++h) {
      const auto off = static_cast<Eigen::Index>(h) * dh;
      const Matrix& prob = c.attention[h];
      const auto da = dconcat.middleCols(off, dh);
      const Matrix dprob = da * c.v.middleCols(off, dh).transpose();
      dv.middleCols(off, dh) = prob.transpose() * da;
      const Eigen::VectorXd row_dot = (dprob.array() * prob.array()).rowwise().sum();
      Matrix dscores = prob.array() * (dprob.colwise() - row_dot).array();
      dscores *= scale;
      dq.middleCols(off, dh) = dscores * c.k.middleCols(off, dh);
      dk.middleCols(off, dh) = dscores.transpose() * c.q.middleCols(off, dh);
    }
    if (g) {
      g->w_q += c.h1.transpose() * dq;
      g->b_q.row(0) += dq.colwise().sum();
      g->w_k += c.h1.transpose() * dk;
      g->b_k.row(0) += dk.colwise().sum();
      g->w_v += c.h1.transpose() * dv;
      g->b_v.row(0) += dv.colwise().sum();
    }
    const Matrix dh1 = dq * p.w_q.transpose() + dk * p.w_k.transpose() + dv * p.w_v.transpose();
    dx = dx_mid + detail::layer_norm_backward(dh1, c.xhat1, c.rstd1, p.ln1_gamma,
                                              g ? &g->ln1_gamma : nullptr,
                                              g ? &g->ln1_beta : nullptr);
  }

  Matrix demb = Matrix::Zero(static_cast<Eigen::Index>(seq_len), d);
  for (Eigen::Index r = 0; r < len; ++r) {
    demb.row(static_cast<Eigen::Index>(t.positions[static_cast<std::size_t>(r)])) = dx.row(r);
  }
  return demb;
}

inline Logits forward_from_embeddings(const ModelParams& params, const ModelConfig& cfg,
                                      const Matrix& embeddings, std::span<const std::uint8_t> mask) {
  return forward_trace(params, cfg, embeddings, mask).logits;
}

inline Prediction forward(const ModelParams& params, const ModelConfig& cfg,
                          const TokenizedSample& sample) {
  Prediction p;
  p.logits = forward_from_embeddings(params, cfg, embed(params, cfg, sample), sample.mask);
  p.probabilities = softmax(p.logits);
  return p;
}

// d(logit[cls]) / d(embeddings), shape mask.size() x d.
inline Matrix logit_gradient(const ModelParams& params, const ModelConfig& cfg,
                             const Matrix& embeddings, std::span<const std::uint8_t> mask,
                             std::size_t cls = 1) {
  const ForwardTrace t = forward_trace(params, cfg, embeddings, mask);
  Logits seed{0.0, 0.0};
  seed.at(cls) = 1.0;
  return backward(params, cfg, t, mask.size(), seed, nullptr);
}

// -log p(label) and its gradient for one labeled sample, accumulated into
// `grads` scaled by `weight`.
inline double accumulate_sample_gradient(const ModelParams& params, const ModelConfig& cfg,
                                         const TokenizedSample& sample, double weight,
                                         ModelParams& grads) {
  if (!sample.label) throw UnlabeledSample("sample '" + sample.name + "' has no label");
  const Matrix emb = embed(params, cfg, sample);
  const ForwardTrace t = forward_trace(params, cfg, emb, sample.mask);
  const auto y = static_cast<std::size_t>(*sample.label);
  const auto prob = softmax(t.logits);
  const double m = std::max(t.logits[0], t.logits[1]);
  const double lse = m + std::log(std::exp(t.logits[0] - m) + std::exp(t.logits[1] - m));
  const double loss = lse - t.logits[y];

  Logits dlogits{prob[0] * weight, prob[1] * weight};
  dlogits[y] -= weight;
  const Matrix demb = backward(params, cfg, t, sample.mask.size(), dlogits, &grads);
  for (const std::size_t pos : t.positions) {
    const auto r = static_cast<Eigen::Index>(pos);
    grads.token_embedding.row(sample.ids[pos]) += demb.row(r);
    grads.position_embedding.row(r) += demb.row(r);
  }
  return loss;
}

struct LossAndGrad {
  double loss = 0.0;
  ModelParams grads;
};

inline constexpr std::size_t kGradientChunk = 8;

// Mean cross-entropy over the batch with exact gradients. Samples are reduced
// in fixed chunks, in order, so the result is independent of `threads`.
inline LossAndGrad loss_and_grad(const ModelParams& params, const ModelConfig& cfg,
                                 std::span<const TokenizedSample* const> batch,
                                 std::size_t threads = 1) {
  if (batch.empty()) throw ConfigError("batch must not be empty");
  for (const auto* s : batch) {
    if (!s->label) throw UnlabeledSample("sample '" + s->name + "' has no label");
  }
  const double weight = 1.0 / static_cast<double>(batch.size());
  const std::size_t n_chunks = (batch.size() + kGradientChunk - 1) / kGradientChunk;
  std::vector<ModelParams> chunk_grads(n_chunks);
  std::vector<double> losses(batch.size(), 0.0);
  parallel_for(n_chunks, threads, [&](std::size_t c) {
    chunk_grads[c] = ModelParams::zeros(cfg);
    const std::size_t end = std::min(batch.size(), (c + 1) * kGradientChunk);
    for (std::size_t i = c * kGradientChunk; i < end; ++i) {
      losses[i] = accumulate_sample_gradient(params, cfg, *batch[i], weight, chunk_grads[c]);
    }
  });

  LossAndGrad out;
  out.grads = std::move(chunk_grads[0]);
  for (std::size_t c = 1; c < n_chunks; ++c) {
    std::vector<Matrix*> dst;
    out.grads.for_each([&](const std::string&, Matrix& m) { dst.push_back(&m); });
    std::size_t k = 0;
    chunk_grads[c].for_each([&](const std::string&, const Matrix& m) { *dst[k++] += m; });
  }
  for (const double l : losses) out.loss += l;
  out.loss *= weight;
  return out;
}

inline LossAndGrad loss_and_grad(const ModelParams& params, const ModelConfig& cfg,
                                 const std::vector<TokenizedSample>& batch, std::size_t threads = 1) {
  std::vector<const TokenizedSample*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& s : batch) ptrs.push_back(&s);
  return loss_and_grad(params, cfg, std::span<const TokenizedSample* const>(ptrs), threads);
}

}  // namespace cfgevade
