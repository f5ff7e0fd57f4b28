#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "lyap/field.hpp"

namespace lyap {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

/// Smallest Cholesky pivot accepted as positive definite.
inline constexpr double kMinMetricPivot = 1e-12;

/// Riemannian metric g_{ab} given by scalar fields. Only the upper triangle
/// is stored, so symmetry holds by construction.
class Metric {
 public:
  Metric() = default;

  static Metric euclidean(std::size_t dimension);
  /// Row-major upper triangle including the diagonal: n(n+1)/2 fields.
  static Metric from_upper(std::size_t dimension, std::vector<ScalarField> upper);
  /// Full matrix; the lower triangle must repeat the upper one.
  static Metric from_matrix(const std::vector<std::vector<ScalarField>>& entries);

  std::size_t dimension() const { return dim_; }
  bool is_euclidean() const { return euclidean_; }
  const ScalarField& entry(std::size_t a, std::size_t b) const;

  /// Coefficient matrix at x (not checked for definiteness).
  Matrix value(std::span<const double> x) const;

  /// Coefficients with first partials: dg[c](a, b) = d_c g_ab.
  struct Jet {
    Matrix g;
    std::vector<Matrix> dg;
  };
  Jet jet(std::span<const double> x) const;

 private:
  std::size_t index(std::size_t a, std::size_t b) const;

  std::size_t dim_ = 0;
  bool euclidean_ = true;
  std::vector<ScalarField> upper_;
};

/// Inverse of a symmetric positive definite matrix; throws SingularMetric
/// when a Cholesky pivot falls below kMinMetricPivot.
Matrix inverse_metric(const Matrix& g);

/// One-form A_a dx^a.
class OneForm {
 public:
  OneForm() = default;
  explicit OneForm(std::vector<ScalarField> components);

  static OneForm zero(std::size_t dimension);
  static OneForm parse(const std::vector<std::string>& components, std::size_t dimension);
  /// Exact differential df.
  static OneForm differential(const ScalarField& f);

  std::size_t dimension() const { return components_.size(); }
  const ScalarField& operator[](std::size_t a) const { return components_[a]; }
  const std::vector<ScalarField>& components() const { return components_; }

  /// Componentwise sum; both forms must be expression-backed.
  friend OneForm operator+(const OneForm& a, const OneForm& b);

 private:
  std::vector<ScalarField> components_;
};

/// Christoffel symbols of the second kind, Gamma^a_{mn}.
class Christoffel {
 public:
  Christoffel() = default;
  explicit Christoffel(std::size_t n) : n_(n), data_(n * n * n, 0.0) {}

  std::size_t dimension() const { return n_; }
  double& operator()(std::size_t a, std::size_t m, std::size_t k) { return data_[(a * n_ + m) * n_ + k]; }
  double operator()(std::size_t a, std::size_t m, std::size_t k) const { return data_[(a * n_ + m) * n_ + k]; }
  const std::vector<double>& data() const { return data_; }

  /// Gamma^a_{mn} v^m v^n for every a.
  Vector contract(const Vector& v) const;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// Immutable snapshot of the geometry at one point.
struct PointGeometry {
  Vector x;
  Matrix g;
  Matrix g_inv;
  Christoffel gamma;
  std::optional<Matrix> magnetic;
};

/// g^{-1} times the coordinate partials of `field`.
Vector riemannian_gradient(const Metric& metric, const ScalarField& field, std::span<const double> x);

Christoffel christoffel(const Metric& metric, std::span<const double> x);
/// Same formula assembled from an already evaluated jet.
Christoffel christoffel_from_jet(const Metric::Jet& jet, const Matrix& g_inv);

/// F_ab = d_a A_b - d_b A_a, assembled antisymmetrically.
Matrix magnetic_tensor(const OneForm& form, std::span<const double> x);

/// Covector c_b = F_ab v^a, i.e. the contraction of dA with v.
Vector contract_two_form(const Matrix& F, const Vector& v);

/// Dual norm sqrt(c_b g^{bc} c_c) of the contraction of dA with v.
double contracted_form_norm(const Metric& metric, const OneForm& form, const Vector& v,
                            std::span<const double> x);

/// Norm of a two-form F with the induced metric, normalized so that
/// |dx ^ dy| = 1 in the Euclidean plane.
double two_form_norm(const Matrix& F, const Matrix& g_inv);

PointGeometry point_geometry(const Metric& metric, const OneForm* form, std::span<const double> x);

/// Memo of Christoffel symbols keyed by points quantized to a 1e-12 grid.
/// Safe for concurrent readers with occasional writers.
class ChristoffelCache {
 public:
  explicit ChristoffelCache(const Metric& metric, double grid = 1e-12) : metric_(metric), grid_(grid) {}

  Christoffel get(std::span<const double> x);
  std::size_t size() const;
  std::size_t hits() const { return hits_; }

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<std::int64_t>& k) const noexcept;
  };

  Metric metric_;
  double grid_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::vector<std::int64_t>, Christoffel, KeyHash> cache_;
  std::atomic<std::size_t> hits_{0};
};

}  // namespace lyap
