#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <limits>

#include "lyap/geometry.hpp"

namespace lyap {

/// dy/dt = f(t, y), written into `dydt`.
using OdeRhs = std::function<void(double t, const Vector& y, Vector& dydt)>;

struct StepControl {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  double max_step = std::numeric_limits<double>::infinity();
  /// Steps below this size abort the run with StepSizeUnderflow.
  double min_step = 1e-14;
  std::size_t max_steps = 100'000'000;
};

struct OdeStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t evaluations = 0;
  double smallest_step = std::numeric_limits<double>::infinity();
  double largest_step = 0.0;
};

/// Continuous extension of one accepted Dormand-Prince step, fourth order
/// accurate anywhere inside [t0, t0 + h].
class DenseSegment {
 public:
  double t0() const { return t0_; }
  double t1() const { return t0_ + h_; }
  double step() const { return h_; }
  const Vector& y0() const { return r_[0]; }
  const Vector& y1() const { return y1_; }

  Vector operator()(double t) const;

 private:
  friend class DormandPrince;
  double t0_ = 0.0;
  double h_ = 0.0;
  std::array<Vector, 5> r_;
  Vector y1_;
};

/// Embedded Runge-Kutta pair of orders 5 and 4 (Dormand & Prince), with
/// first-same-as-last reuse of the final stage.
class DormandPrince {
 public:
  explicit DormandPrince(OdeRhs rhs) : rhs_(std::move(rhs)) {}

  /// Adaptive integration from t0 to t1 (either direction). `on_step` sees
  /// every accepted step. Throws StepSizeUnderflow.
  OdeStats integrate(double t0, const Vector& y0, double t1, const StepControl& control,
                     const std::function<void(const DenseSegment&)>& on_step) const;

  /// `steps` equal steps from t0 to t1. The result is a smooth function of
  /// (t1, y0), which keeps finite-difference Jacobians of it meaningful.
  Vector integrate_fixed(double t0, const Vector& y0, double t1, std::size_t steps,
                         OdeStats* stats = nullptr) const;

 private:
  struct Attempt {
    Vector y1;
    Vector k7;
    double error = 0.0;
    std::array<Vector, 7> k;
  };
  void attempt(double t, const Vector& y, const Vector& k1, double h, const StepControl* control,
               Attempt& out) const;
  double initial_step(double t0, const Vector& y0, const Vector& f0, double direction,
                      const StepControl& control) const;

  OdeRhs rhs_;
};

}  // namespace lyap
