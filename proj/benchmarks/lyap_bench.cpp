#include <benchmark/benchmark.h>

#include <vector>

#include "lyap/certify.hpp"
#include "lyap/charts.hpp"
#include "lyap/corpus.hpp"
#include "lyap/dynamics.hpp"
#include "lyap/geometry.hpp"
#include "lyap/sweep.hpp"

namespace {

using namespace lyap;

const ScalarField& kolibri() {
  static const ScalarField f = ScalarField::parse("(x1^2*x3^2 + x1^3 - x2^2)^2", 3);
  return f;
}

const std::vector<double> kPoint{0.3, -0.7, 1.1};

void BM_Eval(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(kolibri().eval(kPoint));
}
BENCHMARK(BM_Eval);

void BM_Gradient(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(kolibri().grad_partials(kPoint));
}
BENCHMARK(BM_Gradient);

void BM_Christoffel(benchmark::State& state) {
  std::vector<std::vector<ScalarField>> rows;
  const char* src[3][3] = {{"2 + sin(x1)", "0.3*x1*x2", "0"},
                           {"0.3*x1*x2", "1 + x2^2", "0.1*x3"},
                           {"0", "0.1*x3", "3 + cos(x1*x3)"}};
  for (auto& r : src) {
    rows.emplace_back();
    for (const char* s : r) rows.back().push_back(ScalarField::parse(s, 3));
  }
  const Metric m = Metric::from_matrix(rows);
  for (auto _ : state) benchmark::DoNotOptimize(christoffel(m, kPoint));
}
BENCHMARK(BM_Christoffel);

void BM_Integrate(benchmark::State& state) {
  const ProblemDefinition def = corpus_problem("whitney-umbrella");
  LagrangianSystem sys{def.metric, def.potential, def.magnetic, 1.0 / static_cast<double>(state.range(0))};
  const State start{0.0, def.center, riemannian_gradient(def.metric, def.f, as_span(def.center))};
  for (auto _ : state) benchmark::DoNotOptimize(integrate(sys, start, def.horizon));
}
BENCHMARK(BM_Integrate)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_Sweep(benchmark::State& state) {
  const ProblemDefinition def = corpus_problem("unstable-magnetic-plane");
  for (auto _ : state) benchmark::DoNotOptimize(run_escape(def));
}
BENCHMARK(BM_Sweep)->Unit(benchmark::kMillisecond);

void BM_BuildChart(benchmark::State& state) {
  const Metric m = Metric::euclidean(3);
  const ScalarField f = ScalarField::parse("x1 + x3^2", 3);
  const auto base = BaseSurfaceMap::parse({"-x2^2", "x1", "x2"}, {{-0.5, 0.5}, {-0.5, 0.5}});
  const auto per_axis = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(build_chart(m, f, base, {-0.5, 0.5}, per_axis));
}
BENCHMARK(BM_BuildChart)->Arg(5)->Arg(9)->Unit(benchmark::kMillisecond);

void BM_SampleShell(benchmark::State& state) {
  const HypothesisProbe probe = corpus_problem("whitney-umbrella").make_probe(42);
  const auto shell = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample_shell(probe, shell));
}
BENCHMARK(BM_SampleShell)->Arg(0)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_CertifyPotential(benchmark::State& state) {
  const HypothesisProbe probe = corpus_problem("kolibri").make_probe(42);
  for (auto _ : state) benchmark::DoNotOptimize(certify_potential_condition(probe));
}
BENCHMARK(BM_CertifyPotential)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
