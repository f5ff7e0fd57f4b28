#include <gtest/gtest.h>

#include <cmath>
#include <future>
#include <vector>

#include "lyap/charts.hpp"
#include "lyap/error.hpp"
#include "support.hpp"

namespace lyap {
namespace {

using test::vec;

const Metric kEuclid = Metric::euclidean(3);

ScalarField field(const char* s) { return ScalarField::parse(s, 3); }

TEST(Flow, UnitFieldTranslates) {
  const Vector out = flow_normalized_gradient(kEuclid, field("x1"), vec({0, 3, 1}), 0.7);
  EXPECT_NEAR(out[0], 0.7, 1e-14);
  EXPECT_EQ(out[1], 3.0);
  EXPECT_EQ(out[2], 1.0);
}

TEST(Flow, ZeroTimeIsIdentity) {
  const Vector start = vec({0.2, -0.4, 0.9});
  EXPECT_EQ(flow_normalized_gradient(kEuclid, field("x1 + x3^2"), start, 0.0), start);
}

TEST(Flow, LevelAdvancesByFlowTime) {
  const ScalarField f = field("x1 + x3^2");
  for (double t : {-0.5, -0.1, 0.3, 0.8}) {
    for (double s : {-0.6, 0.0, 0.45}) {
      const Vector out = flow_normalized_gradient(kEuclid, f, vec({-s * s, 0.2, s}), t);
      EXPECT_NEAR(f.eval(as_span(out)), t, 1e-8);
    }
  }
}

TEST(Flow, CriticalPointStopsTheFlow) {
  EXPECT_THROW(flow_normalized_gradient(kEuclid, field("x1^2 + x2^2"), vec({0, 0, 0}), 0.1), GradientTooSmall);
}

TEST(FlowProperty, Additivity) {
  const ScalarField f = field("x1 + x3^2");
  auto g = test::rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const double s = test::uniform(g, -0.4, 0.4), t = test::uniform(g, -0.4, 0.4);
    const Vector x = test::random_point(g, 3, -0.5, 0.5);
    const Vector a = flow_normalized_gradient(kEuclid, f, flow_normalized_gradient(kEuclid, f, x, t), s);
    const Vector b = flow_normalized_gradient(kEuclid, f, x, s + t);
    EXPECT_LE((a - b).norm(), 1e-7);
  }
}

BaseSurfaceMap parabolic_base() { return BaseSurfaceMap::parse({"-x2^2", "x1", "x2"}, {{-0.5, 0.5}, {-0.5, 0.5}}); }

const ChartBuild& parabolic_chart() {
  static const ChartBuild b = build_chart(kEuclid, field("x1 + x3^2"), parabolic_base(), {-0.5, 0.5});
  return b;
}

TEST(BuildChart, PlanarLevelSets) {
  const auto base = BaseSurfaceMap::parse({"x1", "x2", "0"}, {{-1, 1}, {-1, 1}});
  const ChartBuild b = build_chart(kEuclid, field("x3"), base, {-1, 1});
  for (const Vector& xi : b.chart.grid(5)) {
    const Vector x = b.chart(as_span(xi));
    EXPECT_NEAR(x[0], xi[1], 1e-15);
    EXPECT_NEAR(x[1], xi[2], 1e-15);
    EXPECT_NEAR(x[2], xi[0], 1e-14);
  }
  EXPECT_EQ(b.report.points, 729u);
}

TEST(BuildChart, ZeroSliceIsBaseMap) {
  const ChartBuild& b = parabolic_chart();
  auto g = test::rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector y = test::random_point(g, 2, -0.5, 0.5);
    const Vector xi = vec({0.0, y[0], y[1]});
    EXPECT_EQ(b.chart(as_span(xi)), b.chart.base()(as_span(y)));
  }
}

TEST(BuildChart, IdentityHoldsOnGrid) {
  const ScalarField f = field("x1 + x3^2");
  const ChartBuild& b = parabolic_chart();
  EXPECT_LE(b.report.max_identity_residual, 1e-8);
  for (const Vector& xi : b.chart.grid(9)) EXPECT_NEAR(f.eval(as_span(b.chart(as_span(xi)))), xi[0], 1e-8);
}

TEST(BuildChart, CurveBaseNeedsTwoFunctions) {
  const auto base = BaseSurfaceMap::parse({"-x1^2", "0", "x1"}, {{-0.5, 0.5}});
  EXPECT_THROW(build_multi_chart(kEuclid, {field("x1 + x3^2")}, base, {{-0.5, 0.5}}), InvalidArgument);
}

TEST(BuildChart, BaseOutsideLevelSetIsRejected) {
  const auto shifted = BaseSurfaceMap::parse({"1 - x2^2", "x1", "x2"}, {{-0.5, 0.5}, {-0.5, 0.5}});
  EXPECT_THROW(build_chart(kEuclid, field("x1 + x3^2"), shifted, {-0.5, 0.5}), IdentityViolation);
}

TEST(BuildChart, DegenerateBaseIsSingular) {
  const auto base = BaseSurfaceMap::parse({"0", "x1", "x1"}, {{-0.5, 0.5}, {-0.5, 0.5}});
  EXPECT_THROW(build_chart(kEuclid, field("x1"), base, {-0.5, 0.5}), SingularJacobian);
}

TEST(BuildChart, TangentialDerivativeVanishes) {
  const ChartBuild& b = parabolic_chart();
  EXPECT_LE(b.report.max_tangential_derivative, 1e-6);
  EXPECT_GE(b.report.min_condition, 1.0);
  EXPECT_TRUE(std::isfinite(b.report.max_condition));
}

TEST(BuildChart, GridImagesAreDistinct) {
  const ChartBuild& b = parabolic_chart();
  EXPECT_TRUE(b.report.injective);
  EXPECT_GE(b.report.min_pairwise_distance, 1e-10);
}

TEST(BuildChart, ConcurrentEvaluationMatchesSerial) {
  const ChartBuild b = build_chart(kEuclid, field("x1 + x3^2"), parabolic_base(), {-0.5, 0.5}, 3);
  std::vector<Vector> pts;
  auto g = test::rng(33);
  for (int i = 0; i < 64; ++i) pts.push_back(test::random_point(g, 3, -0.5, 0.5));
  std::vector<std::future<Vector>> jobs;
  for (const auto& p : pts) jobs.push_back(std::async(std::launch::async, [&b, p] { return b.chart(as_span(p)); }));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vector parallel = jobs[i].get();
    EXPECT_EQ(parallel, b.chart(as_span(pts[i])));
  }
}

TEST(BlockCheck, PlanarChartHasNoMixedTerms) {
  const auto base = BaseSurfaceMap::parse({"x1", "x2", "0"}, {{-1, 1}, {-1, 1}});
  const ChartBuild b = build_chart(kEuclid, field("x3"), base, {-1, 1});
  const BlockReport r = pullback_metric_block_check(b.chart);
  EXPECT_LE(r.max_off_block, 1e-9);
  EXPECT_TRUE(r.pass);
}

TEST(BlockCheck, ParabolicChart) {
  const ChartBuild& b = parabolic_chart();
  const BlockReport r = pullback_metric_block_check(b.chart);
  EXPECT_LE(r.max_off_block, 1e-6);
  EXPECT_TRUE(r.pass);
}

TEST(BlockCheck, ShearedBaseStillAdapted) {
  const Metric m = test::parse_metric({{"1", "0", "0"}, {"0", "1 + x3^2", "0"}, {"0", "0", "2"}});
  const auto base = BaseSurfaceMap::parse({"0", "x1 + 0.3*x2", "x2"}, {{-0.5, 0.5}, {-0.5, 0.5}});
  const ChartBuild b = build_chart(m, field("x1"), base, {-0.5, 0.5}, 5);
  const BlockReport r = pullback_metric_block_check(b.chart, 5);
  EXPECT_TRUE(r.pass);
  const Matrix G = pullback_metric(b.chart, as_span(vec({0.2, 0.1, -0.3})));
  EXPECT_NEAR(G(0, 0), 1.0, 1e-8);
}

std::vector<ScalarField> pair_functions() { return {field("x1 + x3^2"), field("x2")}; }

BaseSurfaceMap pair_base() { return BaseSurfaceMap::parse({"-x1^2", "0", "x1"}, {{-0.5, 0.5}}); }

const ChartBuild& pair_chart() {
  static const ChartBuild b =
      build_multi_chart(kEuclid, pair_functions(), pair_base(), {{-0.5, 0.5}, {-0.5, 0.5}});
  return b;
}

TEST(MultiChart, CoordinatePlanes) {
  const auto base = BaseSurfaceMap::parse({"0", "0", "x1"}, {{-1, 1}});
  const ChartBuild b = build_multi_chart(kEuclid, {field("x1"), field("x2")}, base, {{-1, 1}, {-1, 1}}, 5);
  for (const Vector& xi : b.chart.grid(5)) EXPECT_LE((b.chart(as_span(xi)) - xi).norm(), 1e-14);
}

TEST(MultiChart, LevelIdentityComponentwise) {
  const auto F = pair_functions();
  const ChartBuild& b = pair_chart();
  for (const Vector& xi : b.chart.grid(9)) {
    const Vector x = b.chart(as_span(xi));
    EXPECT_NEAR(F[0].eval(as_span(x)), xi[0], 1e-8);
    EXPECT_NEAR(F[1].eval(as_span(x)), xi[1], 1e-8);
  }
  EXPECT_LE(b.report.max_additivity_residual, 1e-8);
}

TEST(MultiChart, FlowOrderDoesNotMatter) {
  const ChartBuild& b = pair_chart();
  EXPECT_LE(b.report.max_order_swap, 1e-7);
  for (const Vector& xi : b.chart.grid(5))
    EXPECT_LE((b.chart.evaluate_ordered(as_span(xi), {0, 1}) - b.chart.evaluate_ordered(as_span(xi), {1, 0})).norm(),
              1e-7);
}

TEST(MultiChart, RadialBlockIsDiagonal) {
  const ChartBuild& b = pair_chart();
  const BlockReport r = pullback_metric_block_check(b.chart);
  EXPECT_LE(r.max_off_block, 1e-6);
  EXPECT_LE(r.max_radial_off_diagonal, 1e-6);
  EXPECT_TRUE(r.pass);
}

TEST(MultiChart, NonCommutingFlowsAreDetected) {
  const std::vector<ScalarField> F{field("x1 + x2*x3"), field("x2")};
  const auto base = BaseSurfaceMap::parse({"0", "0", "x1"}, {{-0.5, 0.5}});
  EXPECT_THROW(build_multi_chart(kEuclid, F, base, {{-0.5, 0.5}, {-0.5, 0.5}}, 5), Error);
}

}  // namespace
}  // namespace lyap
