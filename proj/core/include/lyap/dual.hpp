#pragma once

// Vector forward-mode dual numbers. A Dual<T> carries a value and up to
// kMaxDim partial derivatives; nesting Dual<Dual<double>> yields second
// derivatives.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>

namespace lyap {

inline constexpr std::size_t kMaxDim = 16;

template <class T>
struct Dual {
  T value{};
  std::array<T, kMaxDim> d{};
  std::uint8_t n = 0;

  Dual() = default;
  /// Constant with no active partials; mixes with any seed width.
  Dual(double c) : value(c) {}  // NOLINT(google-explicit-constructor)
  Dual(T v, std::size_t dim) : value(v), n(static_cast<std::uint8_t>(dim)) {}

  /// Independent variable number `index` of a `dim`-dimensional seed.
  static Dual variable(T v, std::size_t index, std::size_t dim) {
    Dual r(v, dim);
    r.d[index] = T(1.0);
    return r;
  }

  std::size_t size() const { return n; }
};

using Dual1 = Dual<double>;
using Dual2 = Dual<Dual1>;

inline double primal(double x) { return x; }
template <class T>
double primal(const Dual<T>& x) {
  return primal(x.value);
}

inline bool all_finite(double x) { return std::isfinite(x); }
template <class T>
bool all_finite(const Dual<T>& x) {
  if (!all_finite(x.value)) return false;
  for (std::size_t i = 0; i < x.n; ++i)
    if (!all_finite(x.d[i])) return false;
  return true;
}

namespace detail {
template <class T>
std::uint8_t merged_size(const Dual<T>& a, const Dual<T>& b) {
  return a.n > b.n ? a.n : b.n;
}
}  // namespace detail

template <class T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
  Dual<T> r;
  r.n = detail::merged_size(a, b);
  r.value = a.value + b.value;
  for (std::size_t i = 0; i < r.n; ++i) r.d[i] = a.d[i] + b.d[i];
  return r;
}

template <class T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
  Dual<T> r;
  r.n = detail::merged_size(a, b);
  r.value = a.value - b.value;
  for (std::size_t i = 0; i < r.n; ++i) r.d[i] = a.d[i] - b.d[i];
  return r;
}

template <class T>
Dual<T> operator-(const Dual<T>& a) {
  Dual<T> r;
  r.n = a.n;
  r.value = -a.value;
  for (std::size_t i = 0; i < r.n; ++i) r.d[i] = -a.d[i];
  return r;
}

template <class T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
  Dual<T> r;
  r.n = detail::merged_size(a, b);
  r.value = a.value * b.value;
  for (std::size_t i = 0; i < r.n; ++i) r.d[i] = a.d[i] * b.value + a.value * b.d[i];
  return r;
}

template <class T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  Dual<T> r;
  r.n = detail::merged_size(a, b);
  r.value = a.value / b.value;
  const T inv = T(1.0) / b.value;
  for (std::size_t i = 0; i < r.n; ++i) r.d[i] = (a.d[i] - r.value * b.d[i]) * inv;
  return r;
}

template <class T>
Dual<T> operator*(double s, const Dual<T>& a) {
  Dual<T> r;
  r.n = a.n;
  r.value = s * a.value;
  for (std::size_t i = 0; i < r.n; ++i) r.d[i] = s * a.d[i];
  return r;
}

template <class T>
Dual<T> operator+(const Dual<T>& a, double s) {
  Dual<T> r = a;
  r.value = r.value + s;
  return r;
}

namespace detail {
// Applies the chain rule for a unary function with value fx and slope dfx.
template <class T>
Dual<T> chain(const Dual<T>& a, const T& fx, const T& dfx) {
  Dual<T> r;
  r.n = a.n;
  r.value = fx;
  for (std::size_t i = 0; i < r.n; ++i) r.d[i] = dfx * a.d[i];
  return r;
}
}  // namespace detail

template <class T>
Dual<T> sin(const Dual<T>& a) {
  using std::cos;
  using std::sin;
  return detail::chain(a, T(sin(a.value)), T(cos(a.value)));
}

template <class T>
Dual<T> cos(const Dual<T>& a) {
  using std::cos;
  using std::sin;
  return detail::chain(a, T(cos(a.value)), T(-sin(a.value)));
}

template <class T>
Dual<T> exp(const Dual<T>& a) {
  using std::exp;
  const T e = exp(a.value);
  return detail::chain(a, e, e);
}

template <class T>
Dual<T> log(const Dual<T>& a) {
  using std::log;
  return detail::chain(a, T(log(a.value)), T(T(1.0) / a.value));
}

template <class T>
Dual<T> sqrt(const Dual<T>& a) {
  using std::sqrt;
  const T s = sqrt(a.value);
  return detail::chain(a, s, T(T(0.5) / s));
}

}  // namespace lyap
