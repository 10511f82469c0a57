// Copyright 2026 The uwbimu Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Forward-mode dual numbers that nest: Dual<Dual<double>> carries a mixed
// second directional derivative, and so on. Used to evaluate Lie derivatives
// and their gradients to machine precision.

#include <cmath>
#include <type_traits>

#include <Eigen/Core>

namespace uwbimu {

template <typename T>
struct Dual {
  T v{};  // value
  T d{};  // derivative along the seeded direction

  constexpr Dual() = default;
  constexpr Dual(T value, T deriv) : v(std::move(value)), d(std::move(deriv)) {}

  template <typename U, std::enable_if_t<std::is_arithmetic_v<U>, int> = 0>
  constexpr Dual(U x) : v(static_cast<double>(x)), d(0.0) {}  // NOLINT(google-explicit-constructor)

  // Lift an inner-layer value; only meaningful when T is itself a dual.
  template <typename U = T, std::enable_if_t<!std::is_arithmetic_v<U>, int> = 0>
  constexpr Dual(const T& x) : v(x), d(0.0) {}  // NOLINT(google-explicit-constructor)

  Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
  Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
  Dual& operator*=(const Dual& o) { d = d * o.v + v * o.d; v *= o.v; return *this; }
  Dual& operator/=(const Dual& o) {
    d = (d * o.v - v * o.d) / (o.v * o.v);
    v /= o.v;
    return *this;
  }
};

template <typename T> Dual<T> operator+(Dual<T> a, const Dual<T>& b) { return a += b; }
template <typename T> Dual<T> operator-(Dual<T> a, const Dual<T>& b) { return a -= b; }
template <typename T> Dual<T> operator*(Dual<T> a, const Dual<T>& b) { return a *= b; }
template <typename T> Dual<T> operator/(Dual<T> a, const Dual<T>& b) { return a /= b; }
template <typename T> Dual<T> operator-(const Dual<T>& a) { return {-a.v, -a.d}; }
template <typename T> Dual<T> operator+(const Dual<T>& a) { return a; }

template <typename T> bool operator<(const Dual<T>& a, const Dual<T>& b) { return a.v < b.v; }
template <typename T> bool operator>(const Dual<T>& a, const Dual<T>& b) { return a.v > b.v; }
template <typename T> bool operator<=(const Dual<T>& a, const Dual<T>& b) { return a.v <= b.v; }
template <typename T> bool operator>=(const Dual<T>& a, const Dual<T>& b) { return a.v >= b.v; }
template <typename T> bool operator==(const Dual<T>& a, const Dual<T>& b) { return a.v == b.v; }
template <typename T> bool operator!=(const Dual<T>& a, const Dual<T>& b) { return a.v != b.v; }

template <typename T>
Dual<T> sqrt(const Dual<T>& a) {
  using std::sqrt;
  T s = sqrt(a.v);
  return {s, a.d / (T(2.0) * s)};
}

template <typename T>
Dual<T> abs(const Dual<T>& a) {
  return a.v < T(0.0) ? -a : a;
}

/// Innermost arithmetic type of a (possibly nested) dual.
template <typename T> struct BaseScalar { using type = T; };
template <typename T> struct BaseScalar<Dual<T>> { using type = typename BaseScalar<T>::type; };

/// Strip every dual layer and return the plain value.
inline double value_of(double x) { return x; }
template <typename T>
double value_of(const Dual<T>& x) { return value_of(x.v); }

}  // namespace uwbimu

namespace Eigen {

template <typename T>
struct NumTraits<uwbimu::Dual<T>> : GenericNumTraits<uwbimu::Dual<T>> {
  using Real = uwbimu::Dual<T>;
  using NonInteger = uwbimu::Dual<T>;
  using Nested = uwbimu::Dual<T>;
  using Literal = uwbimu::Dual<T>;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 2 * NumTraits<T>::ReadCost,
    AddCost = 2 * NumTraits<T>::AddCost,
    MulCost = 3 * NumTraits<T>::MulCost + NumTraits<T>::AddCost,
  };
  static inline Real epsilon() { return Real(NumTraits<double>::epsilon()); }
  static inline Real dummy_precision() { return Real(NumTraits<double>::dummy_precision()); }
  static inline int digits10() { return NumTraits<double>::digits10(); }
};

}  // namespace Eigen
