#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "lyap/corpus.hpp"
#include "lyap/error.hpp"
#include "lyap/harness.hpp"
#include "lyap/sweep.hpp"
#include "support.hpp"

namespace lyap {
namespace {

const std::filesystem::path kCorpusDir = LYAP_CORPUS_DIR;

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

const char* kValid = R"({
  "name": "probe",
  "dimension": 3,
  "potential": "x3^2",
  "magnetic": ["0", "x3", "0"],
  "f": "x1",
  "center": [0, 0, 0],
  "T": 1,
  "epsilons": [0.1, 0.01, 0.001]
})";

std::string with(std::string text, const std::string& from, const std::string& to) {
  const auto at = text.find(from);
  EXPECT_NE(at, std::string::npos);
  return text.replace(at, from.size(), to);
}

std::vector<std::string> problems_of(const std::string& text) {
  try {
    parse_problem(text);
  } catch (const ValidationError& e) {
    return e.problems();
  }
  return {};
}

bool mentions(const std::vector<std::string>& problems, const std::string& needle) {
  return std::any_of(problems.begin(), problems.end(),
                     [&](const std::string& p) { return p.find(needle) != std::string::npos; });
}

TEST(LoadProblem, WhitneyFile) {
  const ProblemDefinition def = load_problem(kCorpusDir / "whitney-umbrella.json");
  EXPECT_EQ(def.dimension, 3u);
  EXPECT_EQ(def.name, "whitney-umbrella");
}

TEST(LoadProblem, MissingFile) { EXPECT_THROW(load_problem(kCorpusDir / "absent.json"), ParseError); }

TEST(LoadProblem, MalformedJson) { EXPECT_THROW(parse_problem("{\"name\": "), ParseError); }

TEST(LoadProblem, MinimalDefinitionIsValid) {
  const ProblemDefinition def = parse_problem(kValid);
  EXPECT_EQ(def.epsilons.size(), 3u);
  EXPECT_TRUE(def.magnetic.has_value());
}

TEST(LoadProblem, CenterWithPositivePotential) {
  const auto problems = problems_of(with(kValid, "\"x3^2\"", "\"x3^2 + 0.5\""));
  EXPECT_TRUE(mentions(problems, "center is not a zero-potential point"));
}

TEST(LoadProblem, IncreasingEpsilons) {
  const auto problems = problems_of(with(kValid, "[0.1, 0.01, 0.001]", "[0.001, 0.01, 0.1]"));
  EXPECT_TRUE(mentions(problems, "strictly decreasing"));
}

TEST(LoadProblem, ErrorsAreAggregated) {
  std::string text = with(kValid, "[0.1, 0.01, 0.001]", "[0.1, 0.2]");
  text = with(text, "\"T\": 1", "\"T\": -1");
  text = with(text, "\"x3^2\"", "\"x3^2 + 0.5\"");
  const auto problems = problems_of(text);
  EXPECT_GE(problems.size(), 3u);
  EXPECT_TRUE(mentions(problems, "T:"));
  EXPECT_TRUE(mentions(problems, "epsilons"));
}

TEST(LoadProblem, CriticalCenterIsRejected) {
  const auto problems = problems_of(with(kValid, "\"f\": \"x1\"", "\"f\": \"x1^2\""));
  EXPECT_FALSE(problems.empty());
}

TEST(Corpus, EntriesValidate) {
  const auto all = corpus();
  EXPECT_GE(all.size(), 7u);
  for (const char* name : {"stable-magnetic-plane", "unstable-magnetic-plane", "mechanical-plane",
                           "whitney-umbrella", "kolibri", "crossing-axes", "corollary1-demo"})
    EXPECT_NO_THROW(corpus_problem(name)) << name;
  EXPECT_THROW(corpus_problem("nope"), InvalidArgument);
}

TEST(Corpus, WhitneyCenterIsZeroPotential) {
  const ProblemDefinition def = corpus_problem("whitney-umbrella");
  EXPECT_EQ(def.center, test::vec({1, 1, 1}));
  EXPECT_EQ(def.potential.eval(as_span(def.center)), 0.0);
}

TEST(Corpus, CrossingAxesExpectsRefutation) {
  const ProblemDefinition def = corpus_problem("crossing-axes");
  ASSERT_TRUE(def.expected_certification.potential.has_value());
  EXPECT_EQ(*def.expected_certification.potential, Verdict::kRefuted);
}

TEST(Corpus, FilesMatchEmbeddedCopies) {
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(kCorpusDir)) {
    if (entry.path().extension() != ".json") continue;
    ++files;
    EXPECT_EQ(read_file(entry.path()), std::string(corpus_json(entry.path().stem().string())));
  }
  EXPECT_EQ(files, corpus_sources().size());
}

const EscapeReport& unstable_report() {
  static const EscapeReport r = [] {
    const ProblemDefinition def = corpus_problem("unstable-magnetic-plane");
    SweepOptions opt = sweep_options_for(def);
    opt.keep_trajectories = true;
    return run_escape(def, opt);
  }();
  return r;
}

TEST(Sweep, UnstablePlaneMovesLinearly) {
  const EscapeReport& r = unstable_report();
  ASSERT_EQ(r.runs.size(), 3u);
  for (const EpsilonRun& run : r.runs) {
    ASSERT_TRUE(run.ok) << run.failure;
    for (std::size_t i = 0; i < run.tau.size(); ++i) EXPECT_NEAR(run.f_values[i], run.tau[i], 1e-7);
    EXPECT_TRUE(run.lemma1.pass);
    EXPECT_FALSE(run.bound_violation);
  }
  for (double d : r.sup_distances) EXPECT_LE(d, 1e-7);
  EXPECT_NEAR(r.limit_drift, 1.0, 1e-6);
}

TEST(Escape, UnstablePlaneTimes) {
  const EscapeReport& r = unstable_report();
  ASSERT_TRUE(r.escape.has_value()) << r.escape_failure;
  const EscapeVerdict& v = *r.escape;
  EXPECT_TRUE(v.demonstrated);
  EXPECT_NEAR(v.level, 1.0, 1e-7);
  ASSERT_EQ(v.times.size(), 3u);
  const double expected_physical[] = {5.0, 50.0, 500.0};
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_TRUE(v.times[i].crossed);
    EXPECT_NEAR(v.times[i].tau_star, 0.5, 1e-2);
    EXPECT_NEAR(v.times[i].physical_time, expected_physical[i], expected_physical[i] * 2e-2);
    EXPECT_NEAR(v.times[i].initial_speed, v.times[i].epsilon, 1e-15);
  }
}

TEST(Sweep, MechanicalPlaneMatchesMagnetic) {
  const EscapeReport r = run_escape(corpus_problem("mechanical-plane"));
  ASSERT_TRUE(r.escape.has_value()) << r.escape_failure;
  EXPECT_TRUE(r.escape->demonstrated);
  const EscapeReport& m = unstable_report();
  ASSERT_EQ(r.runs.size(), m.runs.size());
  for (std::size_t k = 0; k < r.runs.size(); ++k)
    for (std::size_t i = 0; i < r.runs[k].tau.size(); ++i)
      EXPECT_NEAR(r.runs[k].f_values[i], m.runs[k].f_values[i], 1e-7);
}

TEST(Escape, StablePlaneHasNoDrift) {
  const ProblemDefinition def = corpus_problem("stable-magnetic-plane");
  const EscapeReport r = run_epsilon_sweep(def);
  for (const EpsilonRun& run : r.runs) {
    ASSERT_TRUE(run.ok) << run.failure;
    for (double f : run.f_values) EXPECT_LE(std::abs(f), run.epsilon * (1.0 + 1e-6));
  }
  EXPECT_THROW(detect_escape(r), NoPositiveDrift);
  const EscapeReport full = run_escape(def);
  EXPECT_FALSE(full.escape.has_value());
  EXPECT_FALSE(full.escape_failure.empty());
}

TEST(Escape, WhitneyDrift) {
  const EscapeReport r = run_escape(corpus_problem("whitney-umbrella"));
  EXPECT_NEAR(r.gradient_norm, std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(r.limit_drift, 2.0, 1e-3);
  ASSERT_TRUE(r.escape.has_value()) << r.escape_failure;
  EXPECT_TRUE(r.escape->demonstrated);
  EXPECT_GT(r.escape->level, 0.0);
}

TEST(Escape, ExplicitLevel) {
  const EscapeVerdict v = detect_escape(unstable_report(), 0.5);
  EXPECT_TRUE(v.demonstrated);
  for (const EscapeTime& t : v.times) EXPECT_NEAR(t.tau_star, 0.25, 1e-2);
}

TEST(SweepProperty, InitialDriftEqualsSquaredGradient) {
  for (const ProblemDefinition& def : corpus()) {
    const EscapeReport r = run_epsilon_sweep(def);
    for (const EpsilonRun& run : r.runs) {
      if (!run.ok) continue;
      EXPECT_LE(run.initial_drift_error, 1e-10) << def.name;
      EXPECT_NEAR(run.initial_drift, r.gradient_norm * r.gradient_norm, 1e-10) << def.name;
      EXPECT_NEAR(run.physical_speed, run.epsilon * r.gradient_norm, 1e-15) << def.name;
      EXPECT_LE(run.energy_drift, def.tolerances.energy_drift) << def.name;
    }
  }
}

TEST(SweepProperty, TimeParameterizationsAgree) {
  const ProblemDefinition def = corpus_problem("whitney-umbrella");
  SweepOptions opt = sweep_options_for(def);
  opt.keep_trajectories = true;
  const EscapeReport r = run_epsilon_sweep(def, opt);
  const LagrangianSystem unscaled{def.metric, def.potential, def.magnetic, std::nullopt};
  for (const EpsilonRun& run : r.runs) {
    if (run.epsilon < 0.01) continue;
    ASSERT_TRUE(run.trajectory.has_value());
    const Vector grad = riemannian_gradient(def.metric, def.f, as_span(def.center));
    for (double frac : {0.25, 0.5, 1.0}) {
      const double tau = frac * def.horizon;
      const State start{0.0, def.center, run.epsilon * grad};
      const auto samples = integrate_forward(unscaled, start, tau / run.epsilon, 64, opt.integration);
      EXPECT_LE((samples.back().x - run.trajectory->at(tau).x).norm(), 1e-6) << run.epsilon << " " << tau;
    }
  }
}

TEST(SweepProperty, JsonIsDeterministic) {
  const ProblemDefinition def = corpus_problem("whitney-umbrella");
  EXPECT_EQ(to_json(run_escape(def)), to_json(run_escape(def)));
}

TEST(SweepProperty, SerialMatchesParallel) {
  const ProblemDefinition def = corpus_problem("unstable-magnetic-plane");
  SweepOptions serial = sweep_options_for(def);
  serial.parallel = false;
  EXPECT_EQ(to_json(run_escape(def, serial)), to_json(run_escape(def)));
}

}  // namespace
}  // namespace lyap
