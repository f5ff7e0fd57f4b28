#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lyap/field.hpp"
#include "lyap/geometry.hpp"

namespace lyap::test {

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline Vector random_point(std::mt19937_64& g, std::size_t n, double lo = -1.0, double hi = 1.0) {
  Vector x(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) x[static_cast<Eigen::Index>(i)] = uniform(g, lo, hi);
  return x;
}

inline Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x[i++] = d;
  return x;
}

/// Central difference of f along coordinate i.
inline double central_partial(const ScalarField& f, std::span<const double> x, std::size_t i, double h) {
  std::vector<double> p(x.begin(), x.end());
  std::vector<double> m(x.begin(), x.end());
  p[i] += h;
  m[i] -= h;
  return (f.eval(p) - f.eval(m)) / (2.0 * h);
}

inline Metric parse_metric(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::vector<ScalarField>> entries;
  for (const auto& r : rows) {
    entries.emplace_back();
    for (const auto& s : r) entries.back().push_back(ScalarField::parse(s, rows.size()));
  }
  return Metric::from_matrix(entries);
}

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

/// Christoffel symbols from central differences of the metric entries.
inline Christoffel christoffel_fd(const Metric& m, const Vector& x, double h = 1e-5) {
  const std::size_t n = m.dimension();
  std::vector<Matrix> dg(n);
  for (std::size_t c = 0; c < n; ++c) {
    Vector p = x, q = x;
    p[static_cast<Eigen::Index>(c)] += h;
    q[static_cast<Eigen::Index>(c)] -= h;
    dg[c] = (m.value(as_span(p)) - m.value(as_span(q))) / (2.0 * h);
  }
  const Matrix gi = m.value(as_span(x)).inverse();
  Christoffel out(n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t b = 0; b < n; ++b)
          s += gi(a, b) * (dg[k](b, i) + dg[i](b, k) - dg[b](i, k));
        out(a, i, k) = 0.5 * s;
      }
  return out;
}

}  // namespace lyap::test
