#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lyap/dynamics.hpp"
#include "lyap/problem.hpp"

namespace lyap {

/// One rescaled run of the sweep.
struct EpsilonRun {
  double epsilon = 0.0;
  bool ok = false;
  /// Error class and message when the integration failed.
  std::string failure_kind;
  std::string failure;

  Lemma1Verdict lemma1;
  bool bound_violation = false;
  double energy_drift = 0.0;
  double max_potential = 0.0;
  /// eps^2 |grad f(p)|^2 / 2.
  double potential_bound = 0.0;
  double max_speed = 0.0;
  double max_path_length = 0.0;
  std::size_t steps = 0;

  /// Uniform grid over [-T, T] with f o x and its derivative df(v).
  std::vector<double> tau;
  std::vector<double> f_values;
  std::vector<double> f_rates;
  /// df(x'(0)) and its distance from |grad f(p)|^2.
  double initial_drift = 0.0;
  double initial_drift_error = 0.0;
  /// eps |grad f(p)|: speed of the unscaled initial condition.
  double physical_speed = 0.0;

  std::optional<Trajectory> trajectory;
};

struct EscapeTime {
  double epsilon = 0.0;
  bool crossed = false;
  double tau_star = 0.0;
  double physical_time = 0.0;
  double initial_speed = 0.0;
};

struct EscapeVerdict {
  bool demonstrated = false;
  /// M: max of f o x on [0, T] along the finest run.
  double level = 0.0;
  /// Noise floor M has to clear tenfold.
  double tolerance = 0.0;
  /// Largest eps below which every run crosses M / 2.
  std::optional<double> threshold_epsilon;
  std::vector<EscapeTime> times;
};

struct EscapeReport {
  std::string name;
  double horizon = 0.0;
  Vector center;
  double gradient_norm = 0.0;
  std::vector<EpsilonRun> runs;
  /// sup |f o x_i - f o x_{i+1}| over the grid for consecutive good runs.
  std::vector<double> sup_distances;
  /// Same for the derivatives.
  std::vector<double> rate_distances;
  /// One-sided second order difference of the finest curve at 0.
  double limit_drift = 0.0;
  /// Max U along the finest run against its bound.
  double limit_max_potential = 0.0;
  double limit_potential_bound = 0.0;

  std::optional<EscapeVerdict> escape;
  std::string escape_failure;
};

struct SweepOptions {
  IntegrationOptions integration;
  /// Keep full trajectories in the report (needed for CSV export).
  bool keep_trajectories = false;
  /// Run the per-eps integrations concurrently.
  bool parallel = true;
};

/// x_eps(0) = p, x_eps'(0) = grad f(p) for every eps of the problem. A failed
/// run is recorded and the sweep continues.
EscapeReport run_epsilon_sweep(const ProblemDefinition& def, const SweepOptions& options = {});

/// Escape analysis of a finished sweep. With no explicit level, M is taken
/// from the finest good run and must exceed ten times the noise floor
/// max(sup distance of the two finest curves, 1e-9). Throws NoPositiveDrift.
EscapeVerdict detect_escape(const EscapeReport& report, std::optional<double> level = std::nullopt);

/// Runs the sweep, then fills `escape` or `escape_failure`.
EscapeReport run_escape(const ProblemDefinition& def, const SweepOptions& options = {});

/// Sweep options derived from the problem's tolerances.
SweepOptions sweep_options_for(const ProblemDefinition& def);

}  // namespace lyap
