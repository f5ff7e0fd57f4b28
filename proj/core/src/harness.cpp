#include "lyap/harness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "lyap/error.hpp"
#include "lyap/format.hpp"

namespace lyap {

namespace {

using ojson = nlohmann::ordered_json;

constexpr double kContractionTol = 1e-8;
constexpr std::size_t kCommutingSamples = 200;

ojson number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

ojson vec(const Vector& v) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
  return a;
}

ojson vec(const std::vector<double>& v) {
  ojson a = ojson::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

ojson mat(const Matrix& m) {
  ojson a = ojson::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vec(Vector(m.row(r).transpose())));
  return a;
}

ojson condition_json(const ConditionResult& c) {
  ojson o;
  o["verdict"] = to_string(c.verdict);
  o["constant"] = number(c.constant);
  ojson shells = ojson::array();
  for (const auto& s : c.shells) {
    ojson row;
    row["lower"] = number(s.lower);
    row["upper"] = number(s.upper);
    row["samples"] = s.points.size();
    row["attempts"] = s.attempts;
    row["max_ratio"] = number(s.max_ratio);
    row["mean_ratio"] = number(s.mean_ratio);
    row["argmax"] = vec(s.argmax);
    shells.push_back(row);
  }
  o["shells"] = shells;
  if (c.witness) {
    o["witness"] = {{"point", vec(c.witness->point)},
                    {"ratio", number(c.witness->ratio)},
                    {"potential", number(c.witness->potential)}};
  } else {
    o["witness"] = nullptr;
  }
  return o;
}

ojson certification_json(const CertificationOutcome& c) {
  ojson o;
  o["probe"] = {{"radius", number(c.radius)}, {"seed", c.seed}};
  o["potential_condition"] = condition_json(c.potential);
  ojson m;
  m["contracted"] = condition_json(c.magnetic.contracted);
  m["field"] = condition_json(c.magnetic.field);
  m["characteristic_residual"] = number(c.magnetic.characteristic_residual);
  m["max_field_norm"] = number(c.magnetic.max_field_norm);
  m["field_vanishes"] = c.magnetic.field_vanishes;
  o["magnetic_condition"] = m;
  o["constants"] = {{"K1", number(c.constants.k1)},
                    {"K2", number(c.constants.k2)},
                    {"C1", number(c.constants.c1)},
                    {"C2", number(c.constants.c2)},
                    {"min_gradient_norm", number(c.constants.min_gradient_norm)},
                    {"center_gradient_norm", number(c.constants.center_gradient_norm)},
                    {"metric_max_eigenvalue", number(c.constants.metric_max_eigenvalue)}};
  if (c.quasi_homogeneous) {
    o["quasi_homogeneous"] = {{"verdict", to_string(c.quasi_homogeneous->verdict)},
                              {"max_residual", number(c.quasi_homogeneous->max_residual)},
                              {"worst_point", vec(c.quasi_homogeneous->worst_point)},
                              {"samples", c.quasi_homogeneous->samples}};
  } else {
    o["quasi_homogeneous"] = nullptr;
  }
  return o;
}

ojson escape_json(const EscapeReport& r, bool curves) {
  ojson o;
  o["name"] = r.name;
  o["T"] = number(r.horizon);
  o["center"] = vec(r.center);
  o["gradient_norm"] = number(r.gradient_norm);
  ojson runs = ojson::array();
  for (const auto& run : r.runs) {
    ojson x;
    x["epsilon"] = number(run.epsilon);
    x["ok"] = run.ok;
    if (!run.ok) {
      x["failure"] = {{"kind", run.failure_kind}, {"message", run.failure}};
      runs.push_back(x);
      continue;
    }
    x["steps"] = run.steps;
    x["energy_drift"] = number(run.energy_drift);
    x["lemma1"] = {{"pass", run.lemma1.pass},
                   {"speed_cap", number(run.lemma1.speed_cap)},
                   {"speed_margin", number(run.lemma1.speed_margin)},
                   {"potential_margin", number(run.lemma1.potential_margin)},
                   {"threshold", number(run.lemma1.threshold)}};
    x["bound_violation"] = run.bound_violation;
    x["max_potential"] = number(run.max_potential);
    x["potential_bound"] = number(run.potential_bound);
    x["max_speed"] = number(run.max_speed);
    x["max_path_length"] = number(run.max_path_length);
    x["initial_drift"] = number(run.initial_drift);
    x["initial_drift_error"] = number(run.initial_drift_error);
    x["physical_initial_speed"] = number(run.physical_speed);
    if (curves) x["f_values"] = vec(run.f_values);
    runs.push_back(x);
  }
  o["runs"] = runs;
  o["sup_distances"] = vec(r.sup_distances);
  o["rate_distances"] = vec(r.rate_distances);
  o["limit_drift"] = number(r.limit_drift);
  o["limit_max_potential"] = number(r.limit_max_potential);
  o["limit_potential_bound"] = number(r.limit_potential_bound);
  if (r.escape) {
    const auto& e = *r.escape;
    ojson times = ojson::array();
    for (const auto& t : e.times) {
      times.push_back({{"epsilon", number(t.epsilon)},
                       {"crossed", t.crossed},
                       {"tau_star", t.crossed ? number(t.tau_star) : ojson(nullptr)},
                       {"physical_time", t.crossed ? number(t.physical_time) : ojson(nullptr)},
                       {"initial_speed", number(t.initial_speed)}});
    }
    o["escape"] = {{"verdict", e.demonstrated ? "escape demonstrated at the tested scales" : "not demonstrated"},
                   {"demonstrated", e.demonstrated},
                   {"level", number(e.level)},
                   {"tolerance", number(e.tolerance)},
                   {"threshold_epsilon", e.threshold_epsilon ? number(*e.threshold_epsilon) : ojson(nullptr)},
                   {"times", times}};
  } else {
    o["escape"] = {{"verdict", "no positive drift"}, {"demonstrated", false}, {"reason", r.escape_failure}};
  }
  return o;
}

ojson chart_json(const ChartOutcome& c) {
  ojson o;
  o["kind"] = c.multi ? "multi" : "single";
  const auto& r = c.chart;
  o["grid"] = {{"per_axis", r.per_axis}, {"points", r.points}};
  o["residuals"] = {{"base", number(r.max_base_residual)},
                    {"identity", number(r.max_identity_residual)},
                    {"identity_worst_point", vec(r.worst_identity_point)},
                    {"additivity", number(r.max_additivity_residual)},
                    {"order_swap", number(r.max_order_swap)},
                    {"tangential_derivative", number(r.max_tangential_derivative)}};
  o["condition_numbers"] = {{"min", number(r.min_condition)}, {"max", number(r.max_condition)}};
  o["injectivity"] = {{"min_pairwise_distance", number(r.min_pairwise_distance)}, {"injective", r.injective}};
  o["block"] = {{"pass", c.block.pass},
                {"max_off_block", number(c.block.max_off_block)},
                {"max_radial_off_diagonal", number(c.block.max_radial_off_diagonal)},
                {"worst_point", vec(c.block.worst_point)}};
  if (c.commuting) {
    o["orthogonal_commuting"] = {{"verdict", to_string(c.commuting->verdict)},
                                 {"max_inner_product", number(c.commuting->max_inner_product)},
                                 {"max_bracket", number(c.commuting->max_bracket)},
                                 {"samples", c.commuting->samples}};
  }
  if (c.contraction) {
    o["pullback_magnetic"] = {
        {"max_contracted_component", number(c.contraction->max_component)},
        {"worst_point", vec(c.contraction->worst_point)},
        {"mismatch_with_magnetic", c.pullback_mismatch ? number(*c.pullback_mismatch) : ojson(nullptr)},
        {"field_at_center", c.center_field ? mat(*c.center_field) : ojson(nullptr)}};
  }
  return o;
}

ojson problem_json(const ProblemOutcome& p) {
  ojson o;
  o["name"] = p.name;
  o["certification"] = p.certification ? certification_json(*p.certification) : ojson(nullptr);
  o["escape"] = p.escape ? escape_json(*p.escape, true) : ojson(nullptr);
  o["chart"] = p.chart ? chart_json(*p.chart) : ojson(nullptr);
  o["mismatches"] = p.mismatches;
  o["failures"] = p.failures;
  o["status"] = !p.failures.empty() ? "numerical failure" : (!p.mismatches.empty() ? "mismatch" : "as expected");
  return o;
}

std::string dump(const ojson& o) { return o.dump(2) + "\n"; }

}  // namespace

CertificationOutcome run_certification(const ProblemDefinition& def, std::uint64_t seed) {
  CertificationOutcome out;
  const HypothesisProbe probe = def.make_probe(seed);
  out.radius = probe.radius;
  out.seed = seed;
  out.potential = certify_potential_condition(probe);
  out.magnetic = certify_magnetic_condition(probe);
  out.constants = proof_constants(probe, out.potential, out.magnetic);
  if (def.quasi_homogeneous) out.quasi_homogeneous = check_quasi_homogeneous(def.potential, *def.quasi_homogeneous, 1000, seed);
  return out;
}

ChartOutcome run_chart(const ProblemDefinition& def, std::uint64_t seed) {
  if (!def.chart) throw InvalidArgument("problem \"" + def.name + "\" has no chart");
  const ChartSpec& spec = *def.chart;
  ChartOutcome out;
  out.multi = spec.multi();
  const std::vector<ScalarField> functions = spec.multi() ? spec.functions : std::vector<ScalarField>{def.f};
  if (out.multi) {
    out.commuting = check_orthogonal_commuting(def.metric, functions,
                                               ball_samples(def.center, def.probe.radius, kCommutingSamples, seed));
  }
  ChartBuild built = build_multi_chart(def.metric, functions, spec.base, spec.radial_box, spec.grid);
  out.chart = built.report;
  out.block = pullback_metric_block_check(built.chart, spec.grid);
  if (spec.omega) {
    const OneForm mu = build_pullback_magnetic(functions, *spec.omega);
    ContractionReport worst;
    for (std::size_t a = 0; a < built.chart.base_dimension(); ++a) {
      ContractionReport r = chart_contracted_form(built.chart, mu, a, spec.grid);
      if (a == 0 || r.max_component > worst.max_component) worst = r;
    }
    out.contraction = worst;
    out.center_field = magnetic_tensor(mu, as_span(def.center));
    if (def.magnetic) {
      double mismatch = 0.0;
      for (const auto& p : ball_samples(def.center, def.probe.radius, kCommutingSamples, seed)) {
        for (std::size_t a = 0; a < def.dimension; ++a)
          mismatch = std::max(mismatch, std::abs(mu[a].eval(as_span(p)) - (*def.magnetic)[a].eval(as_span(p))));
      }
      out.pullback_mismatch = mismatch;
    }
  }
  return out;
}

std::vector<std::string> escape_mismatches(const ProblemDefinition& def, const EscapeReport& report) {
  std::vector<std::string> out;
  for (const auto& run : report.runs) {
    if (run.ok && run.bound_violation)
      out.push_back("eps " + format_double(run.epsilon) + ": energy bounds or initial drift violated");
  }
  if (!def.expected) return out;
  const bool escaped = report.escape && report.escape->demonstrated;
  if (*def.expected == Expectation::kUnstable && !escaped)
    out.push_back("expected unstable but escape was not demonstrated");
  if (*def.expected == Expectation::kStable && report.escape)
    out.push_back("expected stable but a positive drift was found");
  return out;
}

std::vector<std::string> certification_mismatches(const ProblemDefinition& def, const CertificationOutcome& c) {
  std::vector<std::string> out;
  const auto& e = def.expected_certification;
  if (e.potential && *e.potential != c.potential.verdict)
    out.push_back("potential condition: expected " + to_string(*e.potential) + ", got " +
                  to_string(c.potential.verdict));
  if (e.magnetic && *e.magnetic != c.magnetic.contracted.verdict)
    out.push_back("magnetic condition: expected " + to_string(*e.magnetic) + ", got " +
                  to_string(c.magnetic.contracted.verdict));
  if (c.quasi_homogeneous && c.quasi_homogeneous->verdict != Verdict::kCertified)
    out.push_back("weighted Euler identity fails (residual " + format_double(c.quasi_homogeneous->max_residual) +
                  ")");
  return out;
}

ProblemOutcome run_problem(const ProblemDefinition& def, std::uint64_t seed, const SweepOptions& options) {
  ProblemOutcome out;
  out.name = def.name;
  try {
    out.certification = run_certification(def, seed);
    for (auto& m : certification_mismatches(def, *out.certification)) out.mismatches.push_back(std::move(m));
  } catch (const Error& e) {
    out.failures.push_back(std::string("certify: ") + e.what());
  }

  out.escape = run_escape(def, options);
  for (const auto& run : out.escape->runs)
    if (!run.ok) out.failures.push_back("sweep: eps " + format_double(run.epsilon) + ": " + run.failure);
  for (auto& m : escape_mismatches(def, *out.escape)) out.mismatches.push_back(std::move(m));

  if (def.chart) {
    try {
      out.chart = run_chart(def, seed);
      if (!out.chart->block.pass) out.mismatches.push_back("chart: pulled-back metric is not block diagonal");
      if (!out.chart->chart.injective) out.mismatches.push_back("chart: grid images collide");
      if (out.chart->commuting && out.chart->commuting->verdict != Verdict::kCertified)
        out.mismatches.push_back("chart: level functions are not orthogonal and commuting");
      if (out.chart->contraction && out.chart->contraction->max_component > kContractionTol)
        out.mismatches.push_back("chart: contracted pullback form does not vanish");
    } catch (const Error& e) {
      out.failures.push_back(std::string("chart: ") + e.what());
    }
  }
  return out;
}

std::string to_json(const CertificationOutcome& c) { return dump(certification_json(c)); }
std::string to_json(const EscapeReport& r, bool include_curves) { return dump(escape_json(r, include_curves)); }
std::string to_json(const ChartOutcome& c) { return dump(chart_json(c)); }
std::string to_json(const ProblemOutcome& p) { return dump(problem_json(p)); }

std::string to_json(const std::vector<ProblemOutcome>& all) {
  ojson o;
  ojson problems = ojson::array();
  std::size_t mismatched = 0;
  std::size_t failed = 0;
  for (const auto& p : all) {
    problems.push_back(problem_json(p));
    if (!p.failures.empty()) ++failed;
    else if (!p.mismatches.empty()) ++mismatched;
  }
  o["summary"] = {{"problems", all.size()},
                  {"as_expected", all.size() - mismatched - failed},
                  {"mismatched", mismatched},
                  {"failed", failed}};
  o["problems"] = problems;
  return dump(o);
}

std::string shell_table_csv(const CertificationOutcome& c) {
  std::ostringstream os;
  os << "condition,lower,upper,samples,attempts,max_ratio,mean_ratio\n";
  auto rows = [&](const char* name, const ConditionResult& r) {
    for (const auto& s : r.shells) {
      os << name << ',' << format_double(s.lower) << ',' << format_double(s.upper) << ',' << s.points.size() << ','
         << s.attempts << ',' << format_double(s.max_ratio) << ',' << format_double(s.mean_ratio) << '\n';
    }
  };
  rows("potential", c.potential);
  rows("magnetic", c.magnetic.contracted);
  rows("field", c.magnetic.field);
  return os.str();
}

std::string sweep_csv(const EscapeReport& r) {
  std::ostringstream os;
  std::vector<const EpsilonRun*> good;
  for (const auto& run : r.runs)
    if (run.ok) good.push_back(&run);
  os << "tau";
  for (const auto* run : good) os << ",f_eps_" << format_double(run->epsilon);
  os << '\n';
  if (good.empty()) return os.str();
  for (std::size_t i = 0; i < good.front()->tau.size(); ++i) {
    os << format_double(good.front()->tau[i]);
    for (const auto* run : good) os << ',' << format_double(run->f_values[i]);
    os << '\n';
  }
  return os.str();
}

}  // namespace lyap
