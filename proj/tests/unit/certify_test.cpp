#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "lyap/certify.hpp"
#include "lyap/charts.hpp"
#include "lyap/error.hpp"
#include "support.hpp"

namespace lyap {
namespace {

using test::vec;

ScalarField field(const char* s) { return ScalarField::parse(s, 3); }

HypothesisProbe probe(const char* U, const char* f, Vector center, double radius = 0.5) {
  HypothesisProbe p;
  p.metric = Metric::euclidean(3);
  p.potential = field(U);
  p.f = field(f);
  p.center = std::move(center);
  p.radius = radius;
  return p;
}

HypothesisProbe plane_probe(const char* magnetic) {
  HypothesisProbe p = probe("x3^2", "x1", vec({0, 0, 0}));
  if (magnetic) p.magnetic = OneForm::parse({"0", magnetic, "0"}, 3);
  return p;
}

TEST(ShellVerdict, Rules) {
  EXPECT_EQ(shell_verdict({4, 4, 4, 4, 4}), Verdict::kCertified);
  EXPECT_EQ(shell_verdict({0, 0, 0, 0}), Verdict::kCertified);
  std::size_t start = 99;
  EXPECT_EQ(shell_verdict({1, 1, 2, 5, 10, 20}, &start), Verdict::kRefuted);
  EXPECT_EQ(start, 1u);
  EXPECT_EQ(shell_verdict({1, 2, 3, 4, 5}), Verdict::kCertified);
  EXPECT_EQ(shell_verdict({1, 2, 3, 4, 9}), Verdict::kInconclusive);
  EXPECT_EQ(shell_verdict({1, 1, 1, 9}), Verdict::kInconclusive);
  EXPECT_EQ(shell_verdict({}), Verdict::kInconclusive);
}

TEST(ShellVerdict, RoundingNoiseCountsAsZero) {
  EXPECT_EQ(shell_verdict({3e-15, 7e-15, 2e-14, 8e-14}), Verdict::kCertified);
  EXPECT_EQ(shell_verdict({1e-6, 1e-5, 1e-4, 1e-3}), Verdict::kRefuted);
}

TEST(PotentialCondition, WhitneyUmbrella) {
  const HypothesisProbe p = probe("(x1^2 - x2^2*x3)^2", "(x1^2 + x2^2)/2", vec({1, 1, 1}), 0.2);
  const ConditionResult r = certify_potential_condition(p);
  EXPECT_EQ(r.verdict, Verdict::kCertified);
  ASSERT_EQ(r.shells.size(), 7u);
  for (const auto& row : r.shells) {
    EXPECT_GE(row.ratios.size(), 100u);
    EXPECT_EQ(row.ratios.size(), row.points.size());
    for (double v : row.ratios) EXPECT_NEAR(v, 4.0, 1e-9);
  }
  EXPECT_FALSE(r.witness);
}

TEST(PotentialCondition, PlaneIsFlatAlongF) {
  const ConditionResult r = certify_potential_condition(plane_probe(nullptr));
  EXPECT_EQ(r.verdict, Verdict::kCertified);
  for (const auto& row : r.shells)
    for (double v : row.ratios) EXPECT_EQ(v, 0.0);
}

TEST(PotentialCondition, CrossingAxesAreRefuted) {
  const ConditionResult r = certify_potential_condition(probe("x1^2*x2^2", "x1", vec({0, 0, 0})));
  EXPECT_EQ(r.verdict, Verdict::kRefuted);
  ASSERT_TRUE(r.witness);
  EXPECT_NEAR(r.witness->ratio, 2.0 / std::abs(r.witness->point[0]), 1e-9 * r.witness->ratio);
  EXPECT_GT(r.shells.back().max_ratio, 10.0 * r.shells.front().max_ratio);
  for (const auto& row : r.shells)
    for (std::size_t i = 0; i < row.points.size(); ++i)
      EXPECT_NEAR(row.ratios[i], 2.0 / std::abs(row.points[i][0]), 1e-9 * row.ratios[i]);
}

TEST(PotentialCondition, ShellsRunTowardsZeroSet) {
  const ConditionResult r = certify_potential_condition(plane_probe(nullptr));
  for (std::size_t i = 1; i < r.shells.size(); ++i) EXPECT_LT(r.shells[i].lower, r.shells[i - 1].lower);
  for (const auto& row : r.shells)
    for (const auto& x : row.points) {
      const double U = x[2] * x[2];
      EXPECT_GE(U, row.lower);
      EXPECT_LE(U, row.upper);
      EXPECT_LE(x.norm(), 0.5);
    }
}

TEST(PotentialCondition, EmptyShell) {
  HypothesisProbe p = probe("x3^2", "x1", vec({0, 0, 1}), 0.1);
  p.max_attempts = 2000;
  EXPECT_THROW(certify_potential_condition(p), EmptyShell);
}

TEST(PotentialCondition, DegenerateF) {
  EXPECT_THROW(certify_potential_condition(probe("x3^2", "0*x1", vec({0, 0, 0}))), GradientTooSmall);
}

TEST(Probe, Validation) {
  HypothesisProbe p = plane_probe(nullptr);
  p.samples = 50;
  p.delta_min = 1.0;
  try {
    p.validate();
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.problems().size(), 2u);
  }
}

TEST(MagneticCondition, ZDyIsCertified) {
  const MagneticResult r = certify_magnetic_condition(plane_probe("x3"));
  EXPECT_EQ(r.contracted.verdict, Verdict::kCertified);
  for (const auto& row : r.contracted.shells)
    for (double v : row.ratios) EXPECT_EQ(v, 0.0);
  EXPECT_FALSE(r.field_vanishes);
}

TEST(MagneticCondition, XDyIsRefuted) {
  const MagneticResult r = certify_magnetic_condition(plane_probe("x1"));
  EXPECT_EQ(r.contracted.verdict, Verdict::kRefuted);
  ASSERT_TRUE(r.contracted.witness);
  for (const auto& row : r.contracted.shells)
    for (std::size_t i = 0; i < row.points.size(); ++i) {
      const double U = row.points[i][2] * row.points[i][2];
      EXPECT_NEAR(row.ratios[i] * std::sqrt(U), 1.0, 1e-12);
    }
  EXPECT_NEAR(r.characteristic_residual, 1.0, 1e-12);
}

TEST(MagneticCondition, NoMagneticTerm) {
  const MagneticResult r = certify_magnetic_condition(plane_probe(nullptr));
  EXPECT_EQ(r.contracted.verdict, Verdict::kCertified);
  EXPECT_TRUE(r.field_vanishes);
}

TEST(CertifyProperty, ScaleCovarianceInF) {
  HypothesisProbe a = probe("(x1^2 - x2^2*x3)^2 + x3^2*x1^2", "x1 + x2^2/2", vec({0.5, 0.5, 0.0}));
  a.magnetic = OneForm::parse({"x2*x3", "x1*x3^2", "x2^2"}, 3);
  HypothesisProbe b = a;
  b.f = field("2*(x1 + x2^2/2)");
  const ConditionResult pa = certify_potential_condition(a), pb = certify_potential_condition(b);
  const MagneticResult ma = certify_magnetic_condition(a), mb = certify_magnetic_condition(b);
  EXPECT_EQ(pa.verdict, pb.verdict);
  EXPECT_EQ(ma.contracted.verdict, mb.contracted.verdict);
  for (std::size_t s = 0; s < pa.shells.size(); ++s)
    for (std::size_t i = 0; i < pa.shells[s].ratios.size(); ++i) {
      EXPECT_EQ(2.0 * pa.shells[s].ratios[i], pb.shells[s].ratios[i]);
      EXPECT_EQ(2.0 * ma.contracted.shells[s].ratios[i], mb.contracted.shells[s].ratios[i]);
    }
}

TEST(CertifyProperty, EuclideanDotProductAgreement) {
  const HypothesisProbe p = probe("(x1^2*x3^2 + x1^3 - x2^2)^2", "x1^2 + 1.5*x2^2 + x3^2/2", vec({0.3, 0.2, 0.4}));
  const ConditionResult r = certify_potential_condition(p);
  for (const auto& row : r.shells)
    for (std::size_t i = 0; i < row.points.size(); ++i) {
      const auto& x = row.points[i];
      const auto du = p.potential.grad_partials(as_span(x));
      const auto df = p.f.grad_partials(as_span(x));
      double dot = 0.0;
      for (int k = 0; k < 3; ++k) dot += du[k] * df[k];
      const double direct = std::abs(dot) / p.potential.eval(as_span(x));
      EXPECT_NEAR(row.ratios[i], direct, 1e-12 * std::max(1.0, direct));
    }
}

TEST(CertifyProperty, SeededDeterminism) {
  const HypothesisProbe p = probe("x1^2*x2^2", "x1", vec({0, 0, 0}));
  const ConditionResult a = certify_potential_condition(p), b = certify_potential_condition(p);
  ASSERT_EQ(a.shells.size(), b.shells.size());
  for (std::size_t s = 0; s < a.shells.size(); ++s) {
    EXPECT_EQ(a.shells[s].ratios, b.shells[s].ratios);
    EXPECT_EQ(a.shells[s].attempts, b.shells[s].attempts);
  }
  const std::size_t n = a.shells.size();
  for (std::size_t j = 0; j < n; ++j) {
    const ShellRow serial = sample_shell(p, j);
    const ShellRow& parallel = a.shells[n - 1 - j];
    ASSERT_EQ(serial.points.size(), parallel.points.size());
    for (std::size_t i = 0; i < serial.points.size(); ++i) EXPECT_EQ(serial.points[i], parallel.points[i]);
  }
  HypothesisProbe other = p;
  other.seed = 43;
  EXPECT_NE(certify_potential_condition(other).shells[0].ratios, a.shells[0].ratios);
}

TEST(ProofConstants, WhitneyConstants) {
  const HypothesisProbe p = probe("(x1^2 - x2^2*x3)^2", "(x1^2 + x2^2)/2", vec({1, 1, 1}));
  const ConditionResult r = certify_potential_condition(p);
  const ProofConstants c = proof_constants(p, r, std::nullopt);
  EXPECT_NEAR(c.k2, 4.0, 1e-9);
  EXPECT_NEAR(c.center_gradient_norm, std::sqrt(2.0), 1e-15);
  EXPECT_GT(c.min_gradient_norm, 0.0);
  EXPECT_EQ(c.k1, 0.0);
}

TEST(QuasiHomogeneous, Whitney) {
  const auto r = check_quasi_homogeneous(field("(x1^2 - x2^2*x3)^2"), {{1, 1, 0}, 4});
  EXPECT_EQ(r.verdict, Verdict::kCertified);
  EXPECT_LE(r.max_residual, 1e-9);
  EXPECT_EQ(r.samples, 1000u);
}

TEST(QuasiHomogeneous, Kolibri) {
  const auto r = check_quasi_homogeneous(field("(x1^2*x3^2 + x1^3 - x2^2)^2"), {{2, 3, 1}, 12});
  EXPECT_EQ(r.verdict, Verdict::kCertified);
  EXPECT_LE(r.max_residual, 1e-9);
}

TEST(QuasiHomogeneous, PlanePotential) {
  EXPECT_EQ(check_quasi_homogeneous(field("x3^2"), {{1, 1, 1}, 2}).verdict, Verdict::kCertified);
}

TEST(QuasiHomogeneous, WrongDegreeIsRefuted) {
  const auto r = check_quasi_homogeneous(field("(x1^2 - x2^2*x3)^2"), {{1, 1, 0}, 3});
  EXPECT_EQ(r.verdict, Verdict::kRefuted);
  EXPECT_GT(r.max_residual, 0.1);
}

TEST(QuasiHomogeneous, InducedFunction) {
  const QuasiHomogeneousSpec spec{{2, 3, 1}, 12};
  const ScalarField f = spec.induced_f();
  const double x[] = {1.0, 2.0, -2.0};
  EXPECT_DOUBLE_EQ(f.eval(x), 1.0 + 6.0 + 2.0);
}

TEST(OrthogonalCommuting, ParabolicPlanePair) {
  const auto pts = ball_samples(vec({0, 0, 0}), 0.5, 200, 42);
  const auto r = check_orthogonal_commuting(Metric::euclidean(3), {field("x1 + x3^2"), field("x2")}, pts);
  EXPECT_EQ(r.verdict, Verdict::kCertified);
  EXPECT_EQ(r.max_inner_product, 0.0);
  EXPECT_LE(r.max_bracket, 1e-5);
}

TEST(OrthogonalCommuting, CoordinatePair) {
  const auto pts = ball_samples(vec({0, 0, 0}), 1.0, 100, 1);
  EXPECT_EQ(check_orthogonal_commuting(Metric::euclidean(3), {field("x1"), field("x2")}, pts).verdict,
            Verdict::kCertified);
}

TEST(OrthogonalCommuting, NonOrthogonalPairIsRefuted) {
  const auto pts = ball_samples(vec({0, 0.5, 0}), 0.3, 100, 2);
  const auto r = check_orthogonal_commuting(Metric::euclidean(3), {field("x1"), field("x1*x2")}, pts);
  EXPECT_EQ(r.verdict, Verdict::kRefuted);
  EXPECT_GT(r.max_inner_product, 0.1);
}

/// [X, Y] for X = grad a / |grad a|^2 and Y likewise, from exact Hessians.
Vector exact_bracket(const ScalarField& a, const ScalarField& b, const Vector& x) {
  auto normalized = [&](const ScalarField& f, Vector& X, Matrix& DX) {
    const auto g = f.grad_partials(as_span(x));
    const auto h = f.hessian(as_span(x));
    const Vector gv = Eigen::Map<const Vector>(g.data(), 3);
    const Matrix H = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(h.data());
    const double s = gv.squaredNorm();
    X = gv / s;
    DX = H / s - 2.0 * gv * (H * gv).transpose() / (s * s);
  };
  Vector X, Y;
  Matrix DX, DY;
  normalized(a, X, DX);
  normalized(b, Y, DY);
  return DY * X - DX * Y;
}

TEST(LieBracket, MatchesExactDerivatives) {
  const ScalarField a = field("x1 + x2^2 + sin(x3)");
  const ScalarField b = field("x2 + x1*x3");
  const auto pts = ball_samples(vec({0.2, 0.1, 0.3}), 0.3, 50, 3);
  for (const Vector& x : pts) {
    const Vector fd = lie_bracket_fd(Metric::euclidean(3), a, b, as_span(x));
    const Vector exact = exact_bracket(a, b, x);
    EXPECT_LE((fd - exact).norm(), 1e-7);
  }
}

TEST(LieBracket, Antisymmetric) {
  const ScalarField a = field("x1 + x2^2");
  const ScalarField b = field("x3 + x1*x2");
  const Vector x = vec({0.1, 0.2, 0.3});
  const Metric m = Metric::euclidean(3);
  EXPECT_LE((lie_bracket_fd(m, a, b, as_span(x)) + lie_bracket_fd(m, b, a, as_span(x))).norm(), 1e-12);
}

TEST(BallSamples, InsideBall) {
  const Vector c = vec({1, 2, 3});
  const auto pts = ball_samples(c, 0.25, 500, 9);
  EXPECT_EQ(pts.size(), 500u);
  for (const auto& p : pts) EXPECT_LE((p - c).norm(), 0.25);
}

TEST(PullbackMagnetic, PulledBackForm) {
  const std::vector<ScalarField> F{field("x1 + x3^2"), field("x2")};
  const OneForm omega = OneForm::parse({"0", "x1"}, 2);
  const OneForm mu = build_pullback_magnetic(F, omega);
  const OneForm expected = OneForm::parse({"0", "x1 + x3^2", "0"}, 3);
  auto g = test::rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const Vector x = test::random_point(g, 3);
    for (std::size_t a = 0; a < 3; ++a) EXPECT_NEAR(mu[a].eval(as_span(x)), expected[a].eval(as_span(x)), 1e-15);
    EXPECT_LE(test::max_abs(magnetic_tensor(mu, as_span(x)) - magnetic_tensor(expected, as_span(x))), 1e-14);
  }
  const Vector origin = vec({0, 0, 0});
  const Matrix F0 = magnetic_tensor(mu, as_span(origin));
  EXPECT_EQ(F0(0, 1), 1.0);
  EXPECT_EQ(F0(1, 0), -1.0);
}

TEST(PullbackMagnetic, ZeroForm) {
  const OneForm mu = build_pullback_magnetic({field("x1 + x3^2"), field("x2")}, OneForm::zero(2));
  const Vector x = vec({0.3, -0.2, 0.1});
  for (std::size_t a = 0; a < 3; ++a) EXPECT_EQ(mu[a].eval(as_span(x)), 0.0);
  EXPECT_EQ(test::max_abs(magnetic_tensor(mu, as_span(x))), 0.0);
}

TEST(PullbackMagnetic, ContractionVanishesInChart) {
  const std::vector<ScalarField> F{field("x1 + x3^2"), field("x2")};
  const auto base = BaseSurfaceMap::parse({"-x1^2", "0", "x1"}, {{-0.5, 0.5}});
  const ChartBuild b = build_multi_chart(Metric::euclidean(3), F, base, {{-0.5, 0.5}, {-0.5, 0.5}}, 5);
  const OneForm mu = build_pullback_magnetic(F, OneForm::parse({"0", "x1"}, 2));
  const ContractionReport r = chart_contracted_form(b.chart, mu, 0, 9);
  EXPECT_EQ(r.points, 729u);
  EXPECT_LE(r.max_component, 1e-8);
}

}  // namespace
}  // namespace lyap
