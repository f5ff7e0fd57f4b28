#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lyap/certify.hpp"
#include "lyap/charts.hpp"
#include "lyap/problem.hpp"
#include "lyap/sweep.hpp"

namespace lyap {

struct CertificationOutcome {
  double radius = 0.0;
  std::uint64_t seed = 0;
  ConditionResult potential;
  MagneticResult magnetic;
  ProofConstants constants;
  std::optional<QuasiHomogeneousResult> quasi_homogeneous;
};

/// Potential and magnetic shell tests plus the weighted Euler identity
/// when the problem declares one.
CertificationOutcome run_certification(const ProblemDefinition& def, std::uint64_t seed);

struct ChartOutcome {
  bool multi = false;
  ChartReport chart;
  BlockReport block;
  std::optional<OrthogonalCommutingResult> commuting;
  /// Present when the chart carries a form omega on R^k.
  std::optional<ContractionReport> contraction;
  /// max |F^*(omega) - mu| over sample points when both exist.
  std::optional<double> pullback_mismatch;
  /// d(F^*(omega)) at the center.
  std::optional<Matrix> center_field;
};

/// Builds and checks the problem's chart. Throws InvalidArgument when the
/// problem has none, and the chart errors otherwise.
ChartOutcome run_chart(const ProblemDefinition& def, std::uint64_t seed);

struct ProblemOutcome {
  std::string name;
  std::optional<CertificationOutcome> certification;
  std::optional<EscapeReport> escape;
  std::optional<ChartOutcome> chart;
  /// Expected verdicts that did not come out.
  std::vector<std::string> mismatches;
  /// Numerical failures, each prefixed with the stage.
  std::vector<std::string> failures;
};

/// Certification, sweep with escape analysis and chart checks, compared
/// against the problem's expectations.
ProblemOutcome run_problem(const ProblemDefinition& def, std::uint64_t seed, const SweepOptions& options);

/// Expected verdict comparisons for the escape analysis alone.
std::vector<std::string> escape_mismatches(const ProblemDefinition& def, const EscapeReport& report);
/// Expected verdict comparisons for the certification alone.
std::vector<std::string> certification_mismatches(const ProblemDefinition& def, const CertificationOutcome& c);

std::string to_json(const CertificationOutcome& c);
std::string to_json(const EscapeReport& r, bool include_curves = true);
std::string to_json(const ChartOutcome& c);
std::string to_json(const ProblemOutcome& p);
std::string to_json(const std::vector<ProblemOutcome>& all);

/// Shell table with one row per shell and condition.
std::string shell_table_csv(const CertificationOutcome& c);
/// f o x on the uniform grid, one column per eps.
std::string sweep_csv(const EscapeReport& r);

}  // namespace lyap
