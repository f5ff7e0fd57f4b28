#include "lyap/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "lyap/error.hpp"
#include "lyap/format.hpp"

namespace lyap {

namespace {

constexpr double kDriftTol = 1e-10;
constexpr double kNoiseFloor = 1e-9;

std::string error_kind(const Error& e) {
  const std::string what = e.what();
  const auto colon = what.find(':');
  return colon == std::string::npos ? std::string("Error") : what.substr(0, colon);
}

EpsilonRun run_one(const ProblemDefinition& def, double eps, const Vector& grad_f, double grad_norm,
                   const SweepOptions& options) {
  EpsilonRun run;
  run.epsilon = eps;
  run.physical_speed = eps * grad_norm;
  run.potential_bound = eps * eps * grad_norm * grad_norm / 2.0;
  LagrangianSystem system{def.metric, def.potential, def.magnetic, eps};
  try {
    Trajectory traj = integrate(system, State{0.0, def.center, grad_f}, def.horizon, options.integration);
    run.ok = true;
    run.energy_drift = traj.energy_drift;
    run.max_potential = traj.max_potential;
    run.max_speed = traj.max_speed;
    run.max_path_length = traj.max_path_length;
    run.steps = traj.forward_stats.accepted + traj.backward_stats.accepted;
    run.lemma1 = check_lemma1_bounds(traj, grad_norm);
    run.bound_violation = !run.lemma1.pass;
    std::vector<double> df(def.dimension);
    for (const auto& s : traj.uniform) {
      const double fx = def.f.value_and_partials(as_span(s.x), df);
      double rate = 0.0;
      for (std::size_t i = 0; i < def.dimension; ++i) rate += df[i] * s.v[static_cast<Eigen::Index>(i)];
      run.tau.push_back(s.tau);
      run.f_values.push_back(fx);
      run.f_rates.push_back(rate);
    }
    run.initial_drift = run.f_rates[run.f_rates.size() / 2];
    run.initial_drift_error = std::abs(run.initial_drift - grad_norm * grad_norm);
    if (run.initial_drift_error > kDriftTol * std::max(1.0, grad_norm * grad_norm)) run.bound_violation = true;
    if (options.keep_trajectories) run.trajectory = std::move(traj);
  } catch (const Error& e) {
    run.ok = false;
    run.failure_kind = error_kind(e);
    run.failure = e.what();
  }
  return run;
}

double sup_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

const EpsilonRun* finest_good(const EscapeReport& report, std::size_t skip = 0) {
  for (auto it = report.runs.rbegin(); it != report.runs.rend(); ++it) {
    if (!it->ok) continue;
    if (skip == 0) return &*it;
    --skip;
  }
  return nullptr;
}

}  // namespace

SweepOptions sweep_options_for(const ProblemDefinition& def) {
  SweepOptions o;
  o.integration.abs_tol = def.tolerances.abs;
  o.integration.rel_tol = def.tolerances.rel;
  o.integration.max_energy_drift = def.tolerances.energy_drift;
  return o;
}

EscapeReport run_epsilon_sweep(const ProblemDefinition& def, const SweepOptions& options) {
  EscapeReport report;
  report.name = def.name;
  report.horizon = def.horizon;
  report.center = def.center;
  const Vector grad_f = riemannian_gradient(def.metric, def.f, as_span(def.center));
  const auto p = def.f.grad_partials(as_span(def.center));
  double norm2 = 0.0;
  for (std::size_t i = 0; i < def.dimension; ++i) norm2 += p[i] * grad_f[static_cast<Eigen::Index>(i)];
  report.gradient_norm = std::sqrt(std::max(0.0, norm2));

  if (options.parallel) {
    std::vector<std::future<EpsilonRun>> jobs;
    for (double eps : def.epsilons)
      jobs.push_back(std::async(std::launch::async, run_one, std::cref(def), eps, std::cref(grad_f),
                                report.gradient_norm, std::cref(options)));
    for (auto& j : jobs) report.runs.push_back(j.get());
  } else {
    for (double eps : def.epsilons) report.runs.push_back(run_one(def, eps, grad_f, report.gradient_norm, options));
  }

  const EpsilonRun* prev = nullptr;
  for (const auto& run : report.runs) {
    if (!run.ok) continue;
    if (prev) {
      report.sup_distances.push_back(sup_distance(prev->f_values, run.f_values));
      report.rate_distances.push_back(sup_distance(prev->f_rates, run.f_rates));
    }
    prev = &run;
  }
  if (const EpsilonRun* fine = finest_good(report)) {
    const std::size_t mid = fine->tau.size() / 2;
    if (mid + 2 < fine->tau.size()) {
      const double h = fine->tau[mid + 1] - fine->tau[mid];
      report.limit_drift =
          (-3.0 * fine->f_values[mid] + 4.0 * fine->f_values[mid + 1] - fine->f_values[mid + 2]) / (2.0 * h);
    }
    report.limit_max_potential = fine->max_potential;
    report.limit_potential_bound = fine->potential_bound;
  }
  return report;
}

EscapeVerdict detect_escape(const EscapeReport& report, std::optional<double> level) {
  const EpsilonRun* fine = finest_good(report);
  if (!fine) throw NoPositiveDrift("no successful run to analyse");
  EscapeVerdict v;
  const EpsilonRun* second = finest_good(report, 1);
  v.tolerance = kNoiseFloor;
  if (second) v.tolerance = std::max(v.tolerance, sup_distance(second->f_values, fine->f_values));

  const std::size_t mid = fine->tau.size() / 2;
  if (level) {
    v.level = *level;
  } else {
    v.level = -std::numeric_limits<double>::infinity();
    for (std::size_t i = mid; i < fine->f_values.size(); ++i) v.level = std::max(v.level, fine->f_values[i]);
  }
  if (!(v.level > 10.0 * v.tolerance)) {
    throw NoPositiveDrift("escape level " + format_double(v.level) + " does not exceed ten times the tolerance " +
                          format_double(v.tolerance) + " on [0, " + format_double(report.horizon) + "]");
  }

  const double half = v.level / 2.0;
  for (const auto& run : report.runs) {
    if (!run.ok) continue;
    EscapeTime t;
    t.epsilon = run.epsilon;
    t.initial_speed = run.physical_speed;
    const std::size_t m = run.tau.size() / 2;
    for (std::size_t i = m; i < run.f_values.size(); ++i) {
      if (run.f_values[i] > half) {
        t.crossed = true;
        if (i == m) {
          t.tau_star = run.tau[i];
        } else {
          const double f0 = run.f_values[i - 1];
          const double f1 = run.f_values[i];
          const double s = (half - f0) / (f1 - f0);
          t.tau_star = run.tau[i - 1] + s * (run.tau[i] - run.tau[i - 1]);
        }
        t.physical_time = t.tau_star / run.epsilon;
        break;
      }
    }
    v.times.push_back(t);
  }
  for (auto it = v.times.rbegin(); it != v.times.rend(); ++it) {
    if (!it->crossed) break;
    v.threshold_epsilon = it->epsilon;
  }
  v.demonstrated = v.threshold_epsilon.has_value() && fine->lemma1.pass;
  return v;
}

EscapeReport run_escape(const ProblemDefinition& def, const SweepOptions& options) {
  EscapeReport report = run_epsilon_sweep(def, options);
  try {
    report.escape = detect_escape(report);
  } catch (const NoPositiveDrift& e) {
    report.escape_failure = e.what();
  }
  return report;
}

}  // namespace lyap
