/*!
 * Copyright (c) 2026 the mltr authors. All rights reserved.
 * Licensed under the Apache License, Version 2.0. See LICENSE file in the
 * project root for license information.
 */
#ifndef MLTR_DUAL_HPP_
#define MLTR_DUAL_HPP_

#include <cmath>

namespace mltr {

/*!
 * \brief Forward-mode dual number: value plus one tangent component.
 *
 * The scoring model and every ranking loss are templated on the scalar type.
 * Running them with Dual parameters whose tangents hold a direction v yields
 * the gradient as values and the exact Hessian-vector product H*v as
 * tangents. This is what backs the full second-order meta gradient.
 *
 * Comparisons act on the value part only, so rankings and branch decisions
 * (max-subtraction, stable sorts, rectifier gates) match the plain double
 * code path exactly.
 */
struct Dual {
  double v = 0.0;  // value
  double d = 0.0;  // tangent

  constexpr Dual() = default;
  constexpr Dual(double value) : v(value) {}  // NOLINT: implicit by design
  constexpr Dual(double value, double tangent) : v(value), d(tangent) {}

  Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
  Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
  Dual& operator*=(const Dual& o) {
    d = d * o.v + v * o.d;
    v *= o.v;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    d = (d * o.v - v * o.d) / (o.v * o.v);
    v /= o.v;
    return *this;
  }
};

inline Dual operator+(Dual a, const Dual& b) { return a += b; }
inline Dual operator-(Dual a, const Dual& b) { return a -= b; }
inline Dual operator*(Dual a, const Dual& b) { return a *= b; }
inline Dual operator/(Dual a, const Dual& b) { return a /= b; }
inline Dual operator-(const Dual& a) { return {-a.v, -a.d}; }

inline bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
inline bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
inline bool operator<=(const Dual& a, const Dual& b) { return a.v <= b.v; }
inline bool operator>=(const Dual& a, const Dual& b) { return a.v >= b.v; }

inline Dual exp(const Dual& a) {
  const double e = std::exp(a.v);
  return {e, a.d * e};
}
inline Dual log(const Dual& a) { return {std::log(a.v), a.d / a.v}; }
inline Dual log1p(const Dual& a) {
  return {std::log1p(a.v), a.d / (1.0 + a.v)};
}

/*! \brief Value part of a scalar; identity for double. */
inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.v; }

/*! \brief Tangent part of a scalar; zero for double. */
inline double tangent_of(double) { return 0.0; }
inline double tangent_of(const Dual& x) { return x.d; }

}  // namespace mltr

#endif  // MLTR_DUAL_HPP_
