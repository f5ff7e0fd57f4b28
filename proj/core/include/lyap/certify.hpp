#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lyap/charts.hpp"
#include "lyap/geometry.hpp"

namespace lyap {

enum class Verdict { kCertified, kRefuted, kInconclusive };

std::string to_string(Verdict v);

/// Sampling setup for the O(U) and O(U^{1/2}) conditions near the zero
/// set of U around `center`.
struct HypothesisProbe {
  Metric metric;
  ScalarField potential;
  std::optional<OneForm> magnetic;
  ScalarField f;
  Vector center;
  double radius = 0.5;
  double delta_min = 1e-8;
  double delta_max = 1e-2;
  std::size_t samples = 200;
  std::size_t max_attempts = 1'000'000;
  std::uint64_t seed = 42;

  /// Throws ValidationError listing every inconsistency.
  void validate() const;
};

struct ShellRow {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t attempts = 0;
  /// Accepted points with their ratios, in draw order.
  std::vector<Vector> points;
  std::vector<double> ratios;
  double max_ratio = 0.0;
  double mean_ratio = 0.0;
  /// Point attaining max_ratio.
  Vector argmax;
};

struct Witness {
  Vector point;
  double ratio = 0.0;
  double potential = 0.0;
};

struct ConditionResult {
  Verdict verdict = Verdict::kInconclusive;
  /// Ordered from the largest shell towards the zero set.
  std::vector<ShellRow> shells;
  /// Largest shell maximum: the empirical O-constant.
  double constant = 0.0;
  /// Set for refuted verdicts: the point with the largest ratio in the
  /// growing run of shells.
  std::optional<Witness> witness;
};

/// Shell verdict from per-shell maxima ordered towards the zero set.
/// Maxima up to 1e-8 count as zero.
/// Refuted when four consecutive maxima increase strictly with the last at
/// least 10x the first; certified when the overall maximum is at most twice
/// the median; inconclusive otherwise. Returns the start of the growing run
/// when refuted.
Verdict shell_verdict(const std::vector<double>& maxima, std::size_t* run_start = nullptr);

/// Draws points of the probe ball with delta <= U <= 10 delta. Shell j has
/// its own generator seeded from (seed, j). Throws EmptyShell.
ShellRow sample_shell(const HypothesisProbe& probe, std::size_t shell_index);

/// |dU(grad f)| / U at x.
double potential_ratio(const HypothesisProbe& probe, std::span<const double> x);
/// |i_{grad f} dmu| / sqrt(U) at x; zero without a magnetic term.
double magnetic_ratio(const HypothesisProbe& probe, std::span<const double> x);
/// |dmu| / sqrt(U) at x.
double field_ratio(const HypothesisProbe& probe, std::span<const double> x);

/// Shell test of dU(grad f) = O(U). Throws EmptyShell, GradientTooSmall.
ConditionResult certify_potential_condition(const HypothesisProbe& probe);

struct MagneticResult {
  /// |i_{grad f} dmu| = O(U^{1/2}).
  ConditionResult contracted;
  /// The stronger |dmu| = O(U^{1/2}).
  ConditionResult field;
  /// max |i_{grad f} dmu| over the shell closest to the zero set.
  double characteristic_residual = 0.0;
  /// max |dmu| over the same shell.
  double max_field_norm = 0.0;
  /// dmu vanishes (<= 1e-10) on every sampled near-zero-set point.
  bool field_vanishes = true;
};

/// Shell test of the magnetic condition. Throws EmptyShell, GradientTooSmall.
MagneticResult certify_magnetic_condition(const HypothesisProbe& probe);

/// Constants of the escape estimates derived from the sampled data.
struct ProofConstants {
  double k1 = 0.0;
  double k2 = 0.0;
  /// min |grad f| over the probe samples.
  double min_gradient_norm = 0.0;
  double center_gradient_norm = 0.0;
  /// Largest metric eigenvalue over the probe samples.
  double metric_max_eigenvalue = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
};

ProofConstants proof_constants(const HypothesisProbe& probe, const ConditionResult& potential,
                               const std::optional<MagneticResult>& magnetic);

/// Weighted homogeneity U(l^a1 x1, ..., l^an xn) = l^r U(x).
struct QuasiHomogeneousSpec {
  std::vector<double> alpha;
  double degree = 0.0;

  /// sum alpha_i x_i^2 / 2.
  ScalarField induced_f() const;
};

struct QuasiHomogeneousResult {
  Verdict verdict = Verdict::kInconclusive;
  double max_residual = 0.0;
  Vector worst_point;
  std::size_t samples = 0;
};

/// max |sum alpha_i x_i d_i U - r U| / (1 + |U|) over uniform samples of
/// [-half_width, half_width]^n; certified at <= 1e-9, refuted otherwise.
QuasiHomogeneousResult check_quasi_homogeneous(const ScalarField& potential, const QuasiHomogeneousSpec& spec,
                                               std::size_t samples = 1000, std::uint64_t seed = 42,
                                               double half_width = 2.0);

/// [X, Y] for the normalized gradients X of F_i and Y of F_j by central
/// differences of step h.
Vector lie_bracket_fd(const Metric& metric, const ScalarField& fi, const ScalarField& fj,
                      std::span<const double> x, double h = 1e-5);

struct OrthogonalCommutingResult {
  Verdict verdict = Verdict::kInconclusive;
  double max_inner_product = 0.0;
  double max_bracket = 0.0;
  Vector worst_point;
  std::size_t samples = 0;
};

/// Certified when max |<grad F_i, grad F_j>| <= 1e-9 and max |[X_i, X_j]|
/// <= 1e-5 over the points, refuted otherwise. Throws GradientTooSmall.
OrthogonalCommutingResult check_orthogonal_commuting(const Metric& metric, const std::vector<ScalarField>& F,
                                                     const std::vector<Vector>& points);

/// Uniform points in the ball of `radius` about `center`.
std::vector<Vector> ball_samples(const Vector& center, double radius, std::size_t count, std::uint64_t seed);

/// mu_a = sum_l c_l(F(x)) d_a F_l(x), with omega = sum_l c_l dr_l on R^k.
OneForm build_pullback_magnetic(const std::vector<ScalarField>& F, const OneForm& omega);

struct ContractionReport {
  double max_component = 0.0;
  Vector worst_point;
  std::size_t points = 0;
};

/// max over the chart grid of the components of Psi^*(i_{grad y_a} dmu),
/// where y_a is the tangential chart coordinate `tangential_index` and both
/// the gradient and dmu are taken in the pulled-back geometry.
ContractionReport chart_contracted_form(const AdaptedChart& chart, const OneForm& form,
                                        std::size_t tangential_index = 0, std::size_t per_axis = 9);

}  // namespace lyap
