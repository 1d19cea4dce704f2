/*!
 * Copyright (c) 2026 the mltr authors. All rights reserved.
 * Licensed under the Apache License, Version 2.0. See LICENSE file in the
 * project root for license information.
 */
#ifndef MLTR_RANDOM_HPP_
#define MLTR_RANDOM_HPP_

#include <array>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace mltr {

/*! \brief splitmix64 step; used both as a standalone mixer and to expand
 *  seeds into generator state. */
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/*! \brief Documented seed-mixing function: folds a tuple of integers into one
 *  64-bit seed. Substreams everywhere in this library derive as
 *  mix_seed({master, tag, indices...}) so that adding unrelated streams never
 *  perturbs existing ones. */
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t acc = 0x6a09e667f3bcc908ULL;  // sqrt(2) fraction bits
  for (std::uint64_t p : parts) {
    acc ^= p + 0x9e3779b97f4a7c15ULL + (acc << 6) + (acc >> 2);
    std::uint64_t s = acc;
    acc = splitmix64(s);
  }
  return acc;
}

/*!
 * \brief Deterministic RNG (xoshiro256**), independent of the standard
 * library's distribution implementations so that sampled streams are
 * bit-reproducible across compilers.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /*! \brief Uniform double in [0, 1) with 53 random bits. */
  double uniform_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /*! \brief Uniform integer in [0, bound). Rejection sampling keeps the
   *  draw unbiased. */
  std::uint64_t uniform_index(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("uniform_index: bound == 0");
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /*! \brief Draw k distinct elements from pool, uniformly without
   *  replacement. Order of the result follows the draw order. */
  template <typename T>
  std::vector<T> sample_without_replacement(std::vector<T> pool,
                                            std::size_t k) {
    if (k > pool.size())
      throw std::invalid_argument("sample_without_replacement: k > pool size");
    std::vector<T> out;
    out.reserve(k);
    std::size_t n = pool.size();
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(n));
      out.push_back(pool[j]);
      pool[j] = pool[n - 1];
      --n;
    }
    return out;
  }

  std::array<std::uint64_t, 4> state() const { return s_; }
  void set_state(const std::array<std::uint64_t, 4>& s) { s_ = s; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace mltr

#endif  // MLTR_RANDOM_HPP_
