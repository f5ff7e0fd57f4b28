#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lyap/geometry.hpp"

namespace lyap {

/// Flows stop when |grad f| falls below this.
inline constexpr double kMinGradientNorm = 1e-8;

using Interval = std::pair<double, double>;

/// grad f / |grad f|^2 at x. Throws GradientTooSmall.
Vector normalized_gradient(const Metric& metric, const ScalarField& f, std::span<const double> x);

/// phi(t, start) for d/dt phi = grad f / |grad f|^2, adaptive steps at `tol`.
/// Throws GradientTooSmall (with the offending point) or DomainError.
Vector flow_normalized_gradient(const Metric& metric, const ScalarField& f, const Vector& start, double t,
                                double tol = 1e-10);

/// Parameterization psi of a level set, one expression per ambient
/// coordinate over the base coordinates (written x1..xm).
struct BaseSurfaceMap {
  std::vector<ScalarField> components;
  std::vector<Interval> box;

  std::size_t base_dimension() const { return box.size(); }
  std::size_t ambient_dimension() const { return components.size(); }
  Vector operator()(std::span<const double> y) const;

  static BaseSurfaceMap parse(const std::vector<std::string>& components, std::vector<Interval> box);
};

/// Adapted parameterization Psi(r, y) = phi^1_{r1} o ... o phi^k_{rk}(psi(y))
/// built from k level functions. Chart coordinates are (r_1..r_k, y_1..y_m)
/// with k + m = n; the single-function chart is the case k = 1, r_1 = z.
class AdaptedChart {
 public:
  AdaptedChart(Metric metric, std::vector<ScalarField> functions, BaseSurfaceMap base,
               std::vector<Interval> radial_box);

  std::size_t dimension() const { return metric_.dimension(); }
  std::size_t radial_dimension() const { return functions_.size(); }
  std::size_t base_dimension() const { return base_.base_dimension(); }
  const Metric& metric() const { return metric_; }
  const std::vector<ScalarField>& functions() const { return functions_; }
  const BaseSurfaceMap& base() const { return base_; }
  const std::vector<Interval>& radial_box() const { return radial_box_; }
  /// Equal steps used by every flow evaluation, whatever the flow time.
  std::size_t flow_steps() const { return flow_steps_; }

  /// Psi(xi), memoized on a 1e-12 grid of chart coordinates.
  Vector operator()(std::span<const double> xi) const;
  /// Psi with the flows applied in `order` (first entry applied first).
  Vector evaluate_ordered(std::span<const double> xi, const std::vector<std::size_t>& order) const;
  /// Flow of the i-th level function for time t from x, on the chart's
  /// fixed step grid.
  Vector flow(std::size_t i, const Vector& x, double t) const;

  /// Central differences with step 1e-5 * max(1, |xi_j|).
  Matrix jacobian(std::span<const double> xi) const;

  /// Tensor grid over radial box x base box, `per_axis` nodes per axis.
  std::vector<Vector> grid(std::size_t per_axis) const;

  std::size_t cache_size() const;

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<std::int64_t>& k) const noexcept;
  };
  struct Cache {
    std::shared_mutex mutex;
    std::unordered_map<std::vector<std::int64_t>, Vector, KeyHash> values;
  };

  Metric metric_;
  std::vector<ScalarField> functions_;
  BaseSurfaceMap base_;
  std::vector<Interval> radial_box_;
  std::size_t flow_steps_ = 0;
  std::shared_ptr<Cache> cache_;
};

struct ChartReport {
  std::size_t per_axis = 0;
  std::size_t points = 0;
  /// max |F_i(psi(y))| over the base grid.
  double max_base_residual = 0.0;
  /// max over grid and i of |F_i(Psi(r, y)) - r_i|.
  double max_identity_residual = 0.0;
  Vector worst_identity_point;
  /// max over grid, i and sampled t of |F_j(phi^i(t, x)) - delta_ij t - F_j(x)|.
  double max_additivity_residual = 0.0;
  /// max |Psi - Psi with reversed flow order|; zero for single charts.
  double max_order_swap = 0.0;
  /// max |d(F_i o Psi)/dy_a|.
  double max_tangential_derivative = 0.0;
  double min_condition = 0.0;
  double max_condition = 0.0;
  /// Smallest distance between images of distinct grid nodes.
  double min_pairwise_distance = 0.0;
  bool injective = false;
};

struct ChartBuild {
  AdaptedChart chart;
  ChartReport report;
};

/// Builds Psi(z, y) = phi(z, psi(y)) and verifies psi lies in f = 0 and
/// |f(Psi(z, y)) - z| <= 1e-8 on the grid. Throws IdentityViolation,
/// GradientTooSmall, SingularJacobian.
ChartBuild build_chart(const Metric& metric, const ScalarField& f, const BaseSurfaceMap& base, Interval z_range,
                       std::size_t per_axis = 9);

/// Multi-function chart; also checks F_j o phi^i(t, x) = delta_ij t + F_j(x)
/// and that reversing the flow order changes Psi by at most 1e-7. Throws
/// IdentityViolation, OrderDependence, GradientTooSmall, SingularJacobian.
ChartBuild build_multi_chart(const Metric& metric, const std::vector<ScalarField>& functions,
                             const BaseSurfaceMap& base, const std::vector<Interval>& radial_box,
                             std::size_t per_axis = 9);

struct BlockReport {
  /// Largest |G_ia| between radial index i and tangential index a.
  double max_off_block = 0.0;
  /// Largest |G_ij|, i != j, inside the radial block (0 when k = 1).
  double max_radial_off_diagonal = 0.0;
  Vector worst_point;
  bool pass = false;
};

/// Pulls the metric back as J^T g J on the grid and checks the block
/// structure at 1e-6. Throws SingularJacobian.
BlockReport pullback_metric_block_check(const AdaptedChart& chart, std::size_t per_axis = 9);

/// J^T g J at one chart point.
Matrix pullback_metric(const AdaptedChart& chart, std::span<const double> xi);

}  // namespace lyap
