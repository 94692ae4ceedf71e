#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cfgevade/error.hpp"
#include "cfgevade/model.hpp"

namespace cfgevade {

// Weight file layout (all integers little-endian):
//   magic "CFGEVMDL" | u32 version | ModelConfig (6 x u64 dims, f64 ln_eps)
//   u64 tensor count | per tensor: u64 rows, u64 cols, rows*cols f64 row-major
inline constexpr std::string_view kParamsMagic = "CFGEVMDL";
inline constexpr std::uint32_t kParamsVersion = 1;

namespace detail {

class ByteWriter {
 public:
  void put_u32(std::uint32_t v) { put_le(v, 4); }
  void put_u64(std::uint64_t v) { put_le(v, 8); }
  void put_f64(double v) { put_u64(std::bit_cast<std::uint64_t>(v)); }
  void put_raw(std::string_view s) { out_.append(s); }
  std::string take() { return std::move(out_); }

 private:
  void put_le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view in) : in_(in) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
  std::uint64_t u64() { return get_le(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string_view raw(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw CorruptFile("weight file is truncated");
  }
  std::uint64_t get_le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string save_params(const ModelParams& params, const ModelConfig& cfg) {
  detail::ByteWriter w;
  w.put_raw(kParamsMagic);
  w.put_u32(kParamsVersion);
  for (const std::size_t dim : {cfg.vocab_size, cfg.d_model, cfg.max_positions, cfg.layers,
                                cfg.heads, cfg.ff_dim}) {
    w.put_u64(dim);
  }
  w.put_f64(cfg.ln_eps);
  std::uint64_t count = 0;
  params.for_each([&](const std::string&, const Matrix&) { ++count; });
  w.put_u64(count);
  params.for_each([&](const std::string&, const Matrix& m) {
    w.put_u64(static_cast<std::uint64_t>(m.rows()));
    w.put_u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) w.put_f64(m(r, c));
    }
  });
  return w.take();
}

struct LoadedModel {
  ModelConfig config;
  ModelParams params;
};

inline LoadedModel load_params(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.raw(kParamsMagic.size()) != kParamsMagic) throw CorruptFile("bad magic");
  if (const auto v = r.u32(); v != kParamsVersion) {
    throw VersionMismatch("weight file version " + std::to_string(v) + ", expected " +
                          std::to_string(kParamsVersion));
  }
  LoadedModel out;
  ModelConfig& cfg = out.config;
  cfg.vocab_size = r.u64();
  cfg.d_model = r.u64();
  cfg.max_positions = r.u64();
  cfg.layers = r.u64();
  cfg.heads = r.u64();
  cfg.ff_dim = r.u64();
  cfg.ln_eps = r.f64();
  // Guard against absurd headers before allocating.
  constexpr std::size_t kMaxDim = std::size_t{1} << 24;
  for (const std::size_t dim : {cfg.vocab_size, cfg.d_model, cfg.max_positions, cfg.layers,
                                cfg.heads, cfg.ff_dim}) {
    if (dim > kMaxDim) throw CorruptFile("implausible model dimension in header");
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw CorruptFile(std::string("invalid config header: ") + e.what());
  }

  out.params = ModelParams::zeros(cfg);
  std::uint64_t expected = 0;
  out.params.for_each([&](const std::string&, const Matrix&) { ++expected; });
  if (r.u64() != expected) throw CorruptFile("tensor count does not match config header");
  out.params.for_each([&](const std::string& name, Matrix& m) {
    const auto rows = r.u64();
    const auto cols = r.u64();
    if (rows != static_cast<std::uint64_t>(m.rows()) || cols != static_cast<std::uint64_t>(m.cols())) {
      throw CorruptFile("tensor '" + name + "' shape does not match config header");
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = r.f64();
    }
  });
  if (!r.done()) throw CorruptFile("trailing bytes after last tensor");
  if (!out.params.all_finite()) throw CorruptFile("non-finite weight");
  return out;
}

}  // namespace cfgevade
