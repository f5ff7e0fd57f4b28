#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lyap/certify.hpp"
#include "lyap/charts.hpp"
#include "lyap/geometry.hpp"

namespace lyap {

enum class Expectation { kStable, kUnstable };

std::string to_string(Expectation e);

struct Tolerances {
  double abs = 1e-10;
  double rel = 1e-10;
  double energy_drift = 1e-6;
};

struct ProbeSettings {
  double radius = 0.5;
  double delta_min = 1e-8;
  double delta_max = 1e-2;
  std::size_t samples = 200;
  std::size_t max_attempts = 1'000'000;
};

/// Adapted chart request. Without explicit level functions the chart is
/// the single-function chart of the (shifted) f.
struct ChartSpec {
  std::vector<std::string> function_sources;
  std::vector<ScalarField> functions;
  std::vector<std::string> base_sources;
  BaseSurfaceMap base;
  std::vector<Interval> radial_box;
  std::size_t grid = 9;
  /// Coefficients c_l(r) of a form on R^k whose pullback is compared with
  /// the magnetic term.
  std::vector<std::string> omega_sources;
  std::optional<OneForm> omega;

  bool multi() const { return !functions.empty(); }
};

struct ExpectedCertification {
  std::optional<Verdict> potential;
  std::optional<Verdict> magnetic;
};

struct ProblemDefinition {
  std::string name;
  std::string description;
  std::size_t dimension = 0;
  std::string metric_source = "euclidean";
  Metric metric;
  std::string potential_source;
  ScalarField potential;
  std::vector<std::string> magnetic_sources;
  std::optional<OneForm> magnetic;
  std::string f_source;
  /// f - f(center).
  ScalarField f;
  Vector center;
  double horizon = 1.0;
  std::vector<double> epsilons{1e-1, 1e-2, 1e-3};
  Tolerances tolerances;
  ProbeSettings probe;
  std::optional<ChartSpec> chart;
  std::optional<Expectation> expected;
  ExpectedCertification expected_certification;
  std::optional<QuasiHomogeneousSpec> quasi_homogeneous;

  HypothesisProbe make_probe(std::uint64_t seed) const;
};

/// Parses and validates a problem given as JSON text. Throws ParseError for
/// malformed JSON and ValidationError listing every problem found.
ProblemDefinition parse_problem(std::string_view json_text);

/// Reads and parses a problem file. Throws ParseError when unreadable.
ProblemDefinition load_problem(const std::filesystem::path& path);

}  // namespace lyap
