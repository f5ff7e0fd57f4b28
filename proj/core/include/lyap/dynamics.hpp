#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lyap/geometry.hpp"
#include "lyap/ode.hpp"

namespace lyap {

/// Potentials may dip below zero by this much from rounding; anything
/// lower is reported as a DomainError.
inline constexpr double kPotentialFloor = -1e-12;

/// L = |v|_g^2 / 2 + s_mu * A(v) - s_U * U, with s_mu = 1/eps and
/// s_U = 1/eps^2 for the rescaled system and s_mu = s_U = 1 when unscaled.
struct LagrangianSystem {
  Metric metric;
  ScalarField potential;
  std::optional<OneForm> magnetic;
  std::optional<double> epsilon;

  std::size_t dimension() const { return metric.dimension(); }
  double magnetic_scale() const { return epsilon ? 1.0 / *epsilon : 1.0; }
  double potential_scale() const { return epsilon ? 1.0 / (*epsilon * *epsilon) : 1.0; }
  double epsilon_or_one() const { return epsilon.value_or(1.0); }

  /// Throws InvalidArgument when the parts disagree on dimension or eps <= 0.
  void validate() const;
};

struct State {
  double tau = 0.0;
  Vector x;
  Vector v;
};

/// Euler-Lagrange acceleration
///   a = -Gamma(v, v) - g^{-1} (s_mu F^T v + s_U dU),  F_ab = d_a A_b - d_b A_a.
Vector el_acceleration(const LagrangianSystem& system, const State& state);

/// |v|_g^2 / 2 + s_U U(x). The magnetic term does no work and is absent.
double hamiltonian(const LagrangianSystem& system, const State& state);

/// |v|_g at x.
double metric_speed(const Metric& metric, const Vector& x, const Vector& v);

struct IntegrationOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  /// Relative energy drift above this aborts with EnergyDriftExceeded.
  double max_energy_drift = 1e-6;
  /// Uniform dense samples: this many intervals across [-T, T].
  std::size_t uniform_intervals = 512;
  /// Overrides the eps/10 cap of the rescaled system when set.
  std::optional<double> max_step;
  /// Reuse Christoffel symbols through a quantized-point memo.
  bool christoffel_cache = false;
};

struct TrajectorySample {
  double tau = 0.0;
  Vector x;
  Vector v;
  double energy = 0.0;
  double potential = 0.0;
  double speed = 0.0;
  double path_length = 0.0;
};

struct Trajectory {
  std::optional<double> epsilon;
  double horizon = 0.0;
  /// Accepted integrator steps, tau = 0 .. T.
  std::vector<TrajectorySample> forward;
  /// Accepted integrator steps, tau = 0 .. -T.
  std::vector<TrajectorySample> backward;
  /// Dense output on a uniform grid over [-T, T], ascending, includes 0.
  std::vector<TrajectorySample> uniform;

  double initial_energy = 0.0;
  /// (max H - min H) / max(1, |H(0)|) over every recorded sample.
  double energy_drift = 0.0;
  double max_speed = 0.0;
  double max_potential = 0.0;
  double max_path_length = 0.0;
  OdeStats forward_stats;
  OdeStats backward_stats;

  /// Uniform-grid sample closest to tau.
  const TrajectorySample& at(double tau) const;
};

/// Integrates both branches [-T, 0] and [0, T]. The rescaled system caps the
/// step at eps/10. Throws StepSizeUnderflow, EnergyDriftExceeded, DomainError.
Trajectory integrate(const LagrangianSystem& system, const State& initial, double horizon,
                     const IntegrationOptions& options = {});

/// Single forward run to `end_time` (> 0) sampled on `intervals` uniform
/// steps; used for physical-time checks of the unscaled system.
std::vector<TrajectorySample> integrate_forward(const LagrangianSystem& system, const State& initial,
                                                double end_time, std::size_t intervals,
                                                const IntegrationOptions& options = {});

struct Lemma1Verdict {
  double speed_cap = 0.0;
  /// max |v|_g - cap.
  double speed_margin = 0.0;
  /// max U - eps^2 cap^2 / 2.
  double potential_margin = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

/// Scans every sample against |v| <= cap and U <= eps^2 cap^2 / 2; passes
/// when both margins are at most 1e-8 (1 + cap^2).
Lemma1Verdict check_lemma1_bounds(const Trajectory& trajectory, double speed_cap);

/// CSV with columns tau,x1..xn,v1..vn,H,U,pathlen over the uniform grid.
std::string trajectory_csv(const Trajectory& trajectory);

}  // namespace lyap
