/*!
 * Copyright (c) 2026 the mltr authors. All rights reserved.
 * Licensed under the Apache License, Version 2.0. See LICENSE file in the
 * project root for license information.
 */
#ifndef MLTR_RANKER_HPP_
#define MLTR_RANKER_HPP_

#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mltr/dual.hpp"
#include "mltr/errors.hpp"
#include "mltr/random.hpp"

namespace mltr {

/*!
 * \brief Architecture of the feed-forward scoring model f(x; theta):
 * rectifier hidden layers, identity output of width 1. with_bias=false is
 * used for analytically tractable linear probes in tests.
 */
struct RankerSpec {
  std::vector<int> layer_dims;  // input, hidden..., 1
  bool with_bias = true;
  std::string tag;  // free-form label stored in checkpoints

  static RankerSpec mlp(int input_dims, std::vector<int> hidden = {64, 32}) {
    RankerSpec spec;
    spec.layer_dims.push_back(input_dims);
    for (int h : hidden) spec.layer_dims.push_back(h);
    spec.layer_dims.push_back(1);
    spec.tag = "mlp";
    return spec;
  }
};

/*! \brief All ranker weights as one flat vector plus its layer layout, so
 *  optimization code can treat theta as a single mathematical object. */
struct ParameterVector {
  std::vector<double> values;
  std::vector<int> layer_dims;
  bool with_bias = true;

  std::size_t size() const { return values.size(); }
  bool same_shape(const ParameterVector& o) const {
    return layer_dims == o.layer_dims && with_bias == o.with_bias &&
           values.size() == o.values.size();
  }
};

inline std::size_t param_count(const std::vector<int>& layer_dims,
                               bool with_bias) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    n += static_cast<std::size_t>(layer_dims[l]) *
         static_cast<std::size_t>(layer_dims[l + 1]);
    if (with_bias) n += static_cast<std::size_t>(layer_dims[l + 1]);
  }
  return n;
}

/*!
 * \brief Seed-deterministic initialization: weights uniform in
 * (-b, b) with b = sqrt(6 / (fan_in + fan_out)), biases zero.
 */
inline ParameterVector init_params(const RankerSpec& spec,
                                   std::uint64_t seed) {
  if (spec.layer_dims.size() < 2)
    throw ConfigError("ranker needs at least input and output layers");
  if (spec.layer_dims.back() != 1)
    throw ConfigError("ranker output width must be 1");
  ParameterVector p;
  p.layer_dims = spec.layer_dims;
  p.with_bias = spec.with_bias;
  p.values.resize(param_count(spec.layer_dims, spec.with_bias));
  Rng rng(mix_seed({seed, 0x494e4954ULL}));  // "INIT"
  std::size_t at = 0;
  for (std::size_t l = 0; l + 1 < spec.layer_dims.size(); ++l) {
    const int fan_in = spec.layer_dims[l];
    const int fan_out = spec.layer_dims[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    const std::size_t n_w =
        static_cast<std::size_t>(fan_in) * static_cast<std::size_t>(fan_out);
    for (std::size_t i = 0; i < n_w; ++i)
      p.values[at++] = (2.0 * rng.uniform_double() - 1.0) * bound;
    if (spec.with_bias) at += static_cast<std::size_t>(fan_out);  // stay zero
  }
  return p;
}

/*!
 * \brief Forward/backward workspace for a stack of items.
 *
 * Templated on the scalar S so the same code path serves plain evaluation
 * (double) and exact Hessian-vector products (Dual). Buffers are reused
 * across items; none of the public entry points allocate per call after the
 * first.
 */
template <typename S>
class MlpPass {
 public:
  MlpPass(const std::vector<int>& layer_dims, bool with_bias)
      : dims_(layer_dims), with_bias_(with_bias) {
    acts_.resize(dims_.size());
    for (std::size_t l = 0; l < dims_.size(); ++l)
      acts_[l].assign(static_cast<std::size_t>(dims_[l]), S(0.0));
    deltas_ = acts_;  // same shapes
  }

  /*! \brief Score one item and cache activations for a following backward. */
  S forward(std::span<const S> params, std::span<const double> x) {
    if (x.size() != static_cast<std::size_t>(dims_.front()))
      throw DimensionMismatch("feature width " + std::to_string(x.size()) +
                              " != model input " +
                              std::to_string(dims_.front()));
    for (std::size_t i = 0; i < x.size(); ++i) acts_[0][i] = S(x[i]);
    std::size_t at = 0;
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
      const int fan_in = dims_[l];
      const int fan_out = dims_[l + 1];
      const bool last = (l + 2 == dims_.size());
      const S* w = params.data() + at;
      at += static_cast<std::size_t>(fan_in) * fan_out;
      const S* b = with_bias_ ? params.data() + at : nullptr;
      if (with_bias_) at += static_cast<std::size_t>(fan_out);
      for (int j = 0; j < fan_out; ++j) {
        S z = b ? b[j] : S(0.0);
        const S* wj = w + static_cast<std::size_t>(j) * fan_in;
        for (int i = 0; i < fan_in; ++i) z += wj[i] * acts_[l][i];
        // rectifier on hidden layers with the 0-subgradient convention
        acts_[l + 1][j] = (!last && value_of(z) <= 0.0) ? S(0.0) : z;
      }
    }
    return acts_.back()[0];
  }

  /*!
   * \brief Accumulate upstream * d(score)/d(params) into grad for the item
   * most recently passed to forward(). grad must be param-sized.
   */
  void backward(std::span<const S> params, const S& upstream,
                std::span<S> grad) {
    deltas_.back()[0] = upstream;
    std::size_t at = params.size();
    for (std::size_t l = dims_.size() - 1; l-- > 0;) {
      const int fan_in = dims_[l];
      const int fan_out = dims_[l + 1];
      if (with_bias_) at -= static_cast<std::size_t>(fan_out);
      const std::size_t b_at = at;
      at -= static_cast<std::size_t>(fan_in) * fan_out;
      const std::size_t w_at = at;

      for (int i = 0; i < fan_in; ++i) deltas_[l][i] = S(0.0);
      for (int j = 0; j < fan_out; ++j) {
        // post-activation delta; gate through the rectifier except on output
        S dz = deltas_[l + 1][j];
        const bool last = (l + 2 == dims_.size());
        if (!last && value_of(acts_[l + 1][j]) <= 0.0) dz = S(0.0);
        if (with_bias_) grad[b_at + j] += dz;
        const S* wj = params.data() + w_at + static_cast<std::size_t>(j) * fan_in;
        S* gj = grad.data() + w_at + static_cast<std::size_t>(j) * fan_in;
        for (int i = 0; i < fan_in; ++i) {
          gj[i] += dz * acts_[l][i];
          deltas_[l][i] += dz * wj[i];
        }
      }
    }
  }

 private:
  std::vector<int> dims_;
  bool with_bias_;
  std::vector<std::vector<S>> acts_;
  std::vector<std::vector<S>> deltas_;
};

/*! \brief Deterministic forward pass for a single feature vector. */
inline double score(const ParameterVector& params,
                    std::span<const double> features) {
  MlpPass<double> pass(params.layer_dims, params.with_bias);
  return pass.forward(params.values, features);
}

/*!
 * \brief Exact reverse-mode gradient of sum_items upstream_i * score_i with
 * respect to the flat parameter vector.
 */
inline ParameterVector grad_wrt_params(
    const ParameterVector& params,
    const std::vector<std::span<const double>>& items,
    const std::vector<double>& upstream) {
  if (items.size() != upstream.size())
    throw DimensionMismatch("upstream count != item count");
  ParameterVector grad;
  grad.layer_dims = params.layer_dims;
  grad.with_bias = params.with_bias;
  grad.values.assign(params.values.size(), 0.0);
  MlpPass<double> pass(params.layer_dims, params.with_bias);
  for (std::size_t i = 0; i < items.size(); ++i) {
    pass.forward(params.values, items[i]);
    pass.backward(params.values, upstream[i], grad.values);
  }
  return grad;
}

/*! \brief Returns params - lr * grad as a fresh vector; the input is never
 *  aliased, so adapted copies cannot corrupt the meta parameters. */
inline ParameterVector apply_sgd_step(const ParameterVector& params,
                                      const ParameterVector& grad,
                                      double lr) {
  if (!params.same_shape(grad))
    throw DimensionMismatch("gradient shape != parameter shape");
  ParameterVector next = params;
  for (std::size_t i = 0; i < next.values.size(); ++i)
    next.values[i] -= lr * grad.values[i];
  return next;
}

// ---------------------------------------------------------------------------
// Checkpoint format (version 1, little-endian):
//   magic   "MLTRCKP1"
//   u32     format version
//   u64     seed
//   u32     tag length, followed by tag bytes
//   u8      with_bias
//   u32     layer count, followed by u32 layer dims
//   u64     value count, followed by f64 values
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void put_le(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
    std::swap(buf[i], buf[sizeof(T) - 1 - i]);
#endif
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!in) throw DataError("checkpoint: truncated stream");
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
    std::swap(buf[i], buf[sizeof(T) - 1 - i]);
#endif
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace detail

struct Checkpoint {
  ParameterVector params;
  std::uint64_t seed = 0;
  std::string tag;
};

inline void save_checkpoint(const Checkpoint& ckpt, std::ostream& out) {
  out.write("MLTRCKP1", 8);
  detail::put_le<std::uint32_t>(out, 1);
  detail::put_le<std::uint64_t>(out, ckpt.seed);
  detail::put_le<std::uint32_t>(out,
                                static_cast<std::uint32_t>(ckpt.tag.size()));
  out.write(ckpt.tag.data(), static_cast<std::streamsize>(ckpt.tag.size()));
  detail::put_le<std::uint8_t>(out, ckpt.params.with_bias ? 1 : 0);
  detail::put_le<std::uint32_t>(
      out, static_cast<std::uint32_t>(ckpt.params.layer_dims.size()));
  for (int d : ckpt.params.layer_dims)
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  detail::put_le<std::uint64_t>(
      out, static_cast<std::uint64_t>(ckpt.params.values.size()));
  for (double v : ckpt.params.values) detail::put_le<double>(out, v);
  if (!out) throw DataError("checkpoint: sink write failure");
}

inline Checkpoint load_checkpoint(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "MLTRCKP1", 8) != 0)
    throw DataError("checkpoint: bad magic");
  const auto version = detail::get_le<std::uint32_t>(in);
  if (version != 1)
    throw DataError("checkpoint: unsupported version " +
                    std::to_string(version));
  Checkpoint ckpt;
  ckpt.seed = detail::get_le<std::uint64_t>(in);
  const auto tag_len = detail::get_le<std::uint32_t>(in);
  ckpt.tag.resize(tag_len);
  in.read(ckpt.tag.data(), tag_len);
  ckpt.params.with_bias = detail::get_le<std::uint8_t>(in) != 0;
  const auto n_layers = detail::get_le<std::uint32_t>(in);
  ckpt.params.layer_dims.resize(n_layers);
  for (auto& d : ckpt.params.layer_dims)
    d = static_cast<int>(detail::get_le<std::uint32_t>(in));
  const auto count = detail::get_le<std::uint64_t>(in);
  if (count != param_count(ckpt.params.layer_dims, ckpt.params.with_bias))
    throw DataError("checkpoint: value count does not match layout");
  ckpt.params.values.resize(count);
  for (auto& v : ckpt.params.values) v = detail::get_le<double>(in);
  return ckpt;
}

}  // namespace mltr

#endif  // MLTR_RANKER_HPP_
