#include "lyap/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "lyap/error.hpp"
#include "lyap/format.hpp"

namespace lyap {

void LagrangianSystem::validate() const {
  const std::size_t n = metric.dimension();
  if (n == 0) throw InvalidArgument("system has no metric");
  if (!potential.valid() || potential.dimension() != n) throw InvalidArgument("potential dimension mismatch");
  if (magnetic && magnetic->dimension() != n) throw InvalidArgument("magnetic form dimension mismatch");
  if (epsilon && !(*epsilon > 0.0 && std::isfinite(*epsilon))) throw InvalidArgument("epsilon must be positive");
}

namespace {

double checked_potential(const LagrangianSystem& system, std::span<const double> x, std::span<double> dU) {
  const double U = system.potential.value_and_partials(x, dU);
  if (U < kPotentialFloor) {
    std::ostringstream os;
    os << "potential is negative (" << U << ")";
    throw DomainError(os.str());
  }
  return U;
}

}  // namespace

Vector el_acceleration(const LagrangianSystem& system, const State& state) {
  const std::size_t n = system.dimension();
  if (static_cast<std::size_t>(state.x.size()) != n || static_cast<std::size_t>(state.v.size()) != n)
    throw InvalidArgument("state dimension mismatch");
  const auto x = as_span(state.x);
  Vector force(static_cast<Eigen::Index>(n));
  checked_potential(system, x, {force.data(), n});
  force *= system.potential_scale();
  if (system.magnetic) {
    force += system.magnetic_scale() * contract_two_form(magnetic_tensor(*system.magnetic, x), state.v);
  }
  if (system.metric.is_euclidean()) return -force;
  const Metric::Jet jet = system.metric.jet(x);
  const Matrix g_inv = inverse_metric(jet.g);
  return -christoffel_from_jet(jet, g_inv).contract(state.v) - g_inv * force;
}

double metric_speed(const Metric& metric, const Vector& x, const Vector& v) {
  if (metric.is_euclidean()) return v.norm();
  return std::sqrt(std::max(0.0, v.dot(metric.value(as_span(x)) * v)));
}

double hamiltonian(const LagrangianSystem& system, const State& state) {
  const double speed = metric_speed(system.metric, state.x, state.v);
  const double U = system.potential.eval(as_span(state.x));
  if (U < kPotentialFloor) throw DomainError("potential is negative");
  return 0.5 * speed * speed + system.potential_scale() * U;
}

const TrajectorySample& Trajectory::at(double tau) const {
  if (uniform.empty()) throw InvalidArgument("trajectory has no uniform samples");
  auto it = std::min_element(uniform.begin(), uniform.end(), [tau](const auto& a, const auto& b) {
    return std::abs(a.tau - tau) < std::abs(b.tau - tau);
  });
  return *it;
}

namespace {

struct Sampler {
  const LagrangianSystem& system;
  std::size_t n;

  TrajectorySample operator()(double tau, const Vector& y) const {
    TrajectorySample s;
    s.tau = tau;
    s.x = y.head(static_cast<Eigen::Index>(n));
    s.v = y.tail(static_cast<Eigen::Index>(n));
    s.potential = system.potential.eval(as_span(s.x));
    if (s.potential < kPotentialFloor) throw DomainError("potential is negative along the trajectory");
    s.speed = metric_speed(system.metric, s.x, s.v);
    s.energy = 0.5 * s.speed * s.speed + system.potential_scale() * s.potential;
    return s;
  }
};

OdeRhs make_rhs(const LagrangianSystem& system, const IntegrationOptions& options) {
  const std::size_t n = system.dimension();
  std::shared_ptr<ChristoffelCache> cache;
  if (options.christoffel_cache && !system.metric.is_euclidean())
    cache = std::make_shared<ChristoffelCache>(system.metric);
  return [&system, n, cache](double, const Vector& y, Vector& dydt) {
    State s;
    s.x = y.head(static_cast<Eigen::Index>(n));
    s.v = y.tail(static_cast<Eigen::Index>(n));
    dydt.resize(y.size());
    dydt.head(static_cast<Eigen::Index>(n)) = s.v;
    if (!cache) {
      dydt.tail(static_cast<Eigen::Index>(n)) = el_acceleration(system, s);
      return;
    }
    const auto x = as_span(s.x);
    Vector force(static_cast<Eigen::Index>(n));
    checked_potential(system, x, {force.data(), n});
    force *= system.potential_scale();
    if (system.magnetic)
      force += system.magnetic_scale() * contract_two_form(magnetic_tensor(*system.magnetic, x), s.v);
    const Matrix g_inv = inverse_metric(system.metric.value(x));
    dydt.tail(static_cast<Eigen::Index>(n)) = -cache->get(x).contract(s.v) - g_inv * force;
  };
}

StepControl make_control(const LagrangianSystem& system, const IntegrationOptions& options) {
  if (!(options.abs_tol > 0.0) || !(options.rel_tol > 0.0)) throw InvalidArgument("tolerances must be positive");
  StepControl control;
  control.abs_tol = options.abs_tol;
  control.rel_tol = options.rel_tol;
  if (options.max_step) {
    control.max_step = *options.max_step;
  } else if (system.epsilon) {
    control.max_step = *system.epsilon / 10.0;
  }
  return control;
}

Vector pack(const State& s) {
  Vector y(s.x.size() + s.v.size());
  y << s.x, s.v;
  return y;
}

void accumulate_path(std::vector<TrajectorySample>& samples) {
  for (std::size_t i = 1; i < samples.size(); ++i) {
    samples[i].path_length = samples[i - 1].path_length + std::abs(samples[i].tau - samples[i - 1].tau) * 0.5 *
                                                              (samples[i].speed + samples[i - 1].speed);
  }
}

}  // namespace

Trajectory integrate(const LagrangianSystem& system, const State& initial, double horizon,
                     const IntegrationOptions& options) {
  system.validate();
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidArgument("horizon T must be positive");
  const std::size_t n = system.dimension();
  if (static_cast<std::size_t>(initial.x.size()) != n || static_cast<std::size_t>(initial.v.size()) != n)
    throw InvalidArgument("initial state dimension mismatch");

  std::size_t intervals = std::max<std::size_t>(2, options.uniform_intervals);
  if (intervals % 2) ++intervals;
  const std::size_t mid = intervals / 2;
  auto node_tau = [&](std::size_t k) {
    return horizon * (2.0 * static_cast<double>(k) - static_cast<double>(intervals)) / static_cast<double>(intervals);
  };

  Trajectory traj;
  traj.epsilon = system.epsilon;
  traj.horizon = horizon;
  traj.uniform.resize(intervals + 1);

  const Sampler sample{system, n};
  const DormandPrince solver(make_rhs(system, options));
  const StepControl control = make_control(system, options);
  const Vector y0 = pack(initial);
  const TrajectorySample start = sample(0.0, y0);
  traj.initial_energy = start.energy;

  // Forward branch: uniform nodes mid..intervals.
  traj.forward.push_back(start);
  traj.uniform[mid] = start;
  std::size_t next = mid + 1;
  traj.forward_stats = solver.integrate(0.0, y0, horizon, control, [&](const DenseSegment& seg) {
    traj.forward.push_back(sample(seg.t1(), seg.y1()));
    while (next <= intervals && node_tau(next) <= seg.t1()) {
      traj.uniform[next] = next == intervals ? sample(horizon, seg.y1()) : sample(node_tau(next), seg(node_tau(next)));
      ++next;
    }
  });
  // The last segment can end one rounding step short of T.
  for (; next <= intervals; ++next) {
    const auto& last = traj.forward.back();
    traj.uniform[next] = sample(node_tau(next), pack(State{0.0, last.x, last.v}));
  }

  // Backward branch: uniform nodes mid-1 .. 0.
  traj.backward.push_back(start);
  std::ptrdiff_t prev = static_cast<std::ptrdiff_t>(mid) - 1;
  traj.backward_stats = solver.integrate(0.0, y0, -horizon, control, [&](const DenseSegment& seg) {
    traj.backward.push_back(sample(seg.t1(), seg.y1()));
    while (prev >= 0 && node_tau(static_cast<std::size_t>(prev)) >= seg.t1()) {
      const double t = node_tau(static_cast<std::size_t>(prev));
      traj.uniform[static_cast<std::size_t>(prev)] = prev == 0 ? sample(-horizon, seg.y1()) : sample(t, seg(t));
      --prev;
    }
  });
  for (; prev >= 0; --prev) {
    const auto& last = traj.backward.back();
    traj.uniform[static_cast<std::size_t>(prev)] =
        sample(node_tau(static_cast<std::size_t>(prev)), pack(State{0.0, last.x, last.v}));
  }

  accumulate_path(traj.forward);
  accumulate_path(traj.backward);
  for (std::size_t k = mid + 1; k <= intervals; ++k) {
    auto& s = traj.uniform[k];
    const auto& p = traj.uniform[k - 1];
    s.path_length = p.path_length + (s.tau - p.tau) * 0.5 * (s.speed + p.speed);
  }
  for (std::size_t k = mid; k-- > 0;) {
    auto& s = traj.uniform[k];
    const auto& p = traj.uniform[k + 1];
    s.path_length = p.path_length + (p.tau - s.tau) * 0.5 * (s.speed + p.speed);
  }

  double h_min = start.energy, h_max = start.energy;
  for (const auto* branch : {&traj.forward, &traj.backward, &traj.uniform}) {
    for (const auto& s : *branch) {
      h_min = std::min(h_min, s.energy);
      h_max = std::max(h_max, s.energy);
      traj.max_speed = std::max(traj.max_speed, s.speed);
      traj.max_potential = std::max(traj.max_potential, s.potential);
      traj.max_path_length = std::max(traj.max_path_length, s.path_length);
    }
  }
  traj.energy_drift = (h_max - h_min) / std::max(1.0, std::abs(start.energy));
  if (traj.energy_drift > options.max_energy_drift) {
    std::ostringstream os;
    os << "relative drift " << traj.energy_drift << " exceeds " << options.max_energy_drift;
    throw EnergyDriftExceeded(os.str());
  }
  return traj;
}

std::vector<TrajectorySample> integrate_forward(const LagrangianSystem& system, const State& initial,
                                                double end_time, std::size_t intervals,
                                                const IntegrationOptions& options) {
  system.validate();
  if (!(end_time > 0.0)) throw InvalidArgument("end time must be positive");
  intervals = std::max<std::size_t>(1, intervals);
  const std::size_t n = system.dimension();
  const Sampler sample{system, n};
  const DormandPrince solver(make_rhs(system, options));
  const Vector y0 = pack(initial);
  std::vector<TrajectorySample> out;
  out.reserve(intervals + 1);
  out.push_back(sample(0.0, y0));
  std::size_t next = 1;
  auto node = [&](std::size_t k) { return end_time * static_cast<double>(k) / static_cast<double>(intervals); };
  solver.integrate(0.0, y0, end_time, make_control(system, options), [&](const DenseSegment& seg) {
    while (next <= intervals && node(next) <= seg.t1()) {
      out.push_back(next == intervals ? sample(end_time, seg.y1()) : sample(node(next), seg(node(next))));
      ++next;
    }
  });
  for (; next <= intervals; ++next) {
    const auto& last = out.back();
    out.push_back(sample(node(next), pack(State{0.0, last.x, last.v})));
  }
  accumulate_path(out);
  return out;
}

Lemma1Verdict check_lemma1_bounds(const Trajectory& trajectory, double speed_cap) {
  Lemma1Verdict v;
  v.speed_cap = speed_cap;
  const double eps = trajectory.epsilon.value_or(1.0);
  const double potential_cap = eps * eps * speed_cap * speed_cap / 2.0;
  double max_speed = -std::numeric_limits<double>::infinity();
  double max_potential = -std::numeric_limits<double>::infinity();
  for (const auto* branch : {&trajectory.forward, &trajectory.backward, &trajectory.uniform}) {
    for (const auto& s : *branch) {
      max_speed = std::max(max_speed, s.speed);
      max_potential = std::max(max_potential, s.potential);
    }
  }
  v.speed_margin = max_speed - speed_cap;
  v.potential_margin = max_potential - potential_cap;
  v.threshold = 1e-8 * (1.0 + speed_cap * speed_cap);
  v.pass = v.speed_margin <= v.threshold && v.potential_margin <= v.threshold;
  return v;
}

std::string trajectory_csv(const Trajectory& trajectory) {
  std::ostringstream os;
  const std::size_t n = trajectory.uniform.empty() ? 0 : static_cast<std::size_t>(trajectory.uniform.front().x.size());
  os << "tau";
  for (std::size_t i = 1; i <= n; ++i) os << ",x" << i;
  for (std::size_t i = 1; i <= n; ++i) os << ",v" << i;
  os << ",H,U,pathlen\n";
  for (const auto& s : trajectory.uniform) {
    os << format_double(s.tau);
    for (Eigen::Index i = 0; i < s.x.size(); ++i) os << ',' << format_double(s.x[i]);
    for (Eigen::Index i = 0; i < s.v.size(); ++i) os << ',' << format_double(s.v[i]);
    os << ',' << format_double(s.energy) << ',' << format_double(s.potential) << ','
       << format_double(s.path_length) << '\n';
  }
  return os.str();
}

}  // namespace lyap
