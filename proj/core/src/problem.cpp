#include "lyap/problem.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lyap/error.hpp"
#include "lyap/format.hpp"

namespace lyap {

namespace {

using json = nlohmann::json;

constexpr double kZeroPotential = 1e-12;
constexpr double kMinCenterGradient = 1e-6;

class Collector {
 public:
  void add(std::string msg) { problems_.push_back(std::move(msg)); }
  bool empty() const { return problems_.empty(); }
  std::vector<std::string> take() { return std::move(problems_); }

 private:
  std::vector<std::string> problems_;
};

std::optional<std::string> expression_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return format_double(v.get<double>());
  return std::nullopt;
}

std::optional<ScalarField> field(const json& v, std::size_t dim, const std::string& where, Collector& errs,
                                 std::string* source = nullptr) {
  const auto text = expression_text(v);
  if (!text) {
    errs.add(where + ": expected an expression string");
    return std::nullopt;
  }
  if (source) *source = *text;
  try {
    return ScalarField::parse(*text, dim);
  } catch (const Error& e) {
    errs.add(where + ": " + e.what());
    return std::nullopt;
  }
}

std::optional<double> number(const json& obj, const char* key, const std::string& where, Collector& errs) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  if (!obj[key].is_number()) {
    errs.add(where + key + ": expected a number");
    return std::nullopt;
  }
  return obj[key].get<double>();
}

std::optional<std::size_t> count(const json& obj, const char* key, const std::string& where, Collector& errs) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  if (!obj[key].is_number_unsigned()) {
    errs.add(where + key + ": expected a non-negative integer");
    return std::nullopt;
  }
  return obj[key].get<std::size_t>();
}

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where, Collector& errs) {
  for (const auto& item : obj.items())
    if (!known.count(item.key())) errs.add(where + "unknown key \"" + item.key() + "\"");
}

std::optional<std::vector<Interval>> intervals(const json& v, const std::string& where, Collector& errs) {
  if (!v.is_array()) {
    errs.add(where + ": expected an array of [low, high] pairs");
    return std::nullopt;
  }
  std::vector<Interval> out;
  for (const auto& p : v) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      errs.add(where + ": expected an array of [low, high] pairs");
      return std::nullopt;
    }
    const double lo = p[0].get<double>();
    const double hi = p[1].get<double>();
    if (!(lo <= hi)) {
      errs.add(where + ": range [" + format_double(lo) + ", " + format_double(hi) + "] is not ordered");
      return std::nullopt;
    }
    out.emplace_back(lo, hi);
  }
  return out;
}

std::optional<Verdict> verdict_from(const json& v, const std::string& where, Collector& errs) {
  if (v.is_null()) return std::nullopt;
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "certified") return Verdict::kCertified;
    if (s == "refuted") return Verdict::kRefuted;
    if (s == "inconclusive") return Verdict::kInconclusive;
  }
  errs.add(where + ": expected \"certified\", \"refuted\" or \"inconclusive\"");
  return std::nullopt;
}

std::optional<ChartSpec> parse_chart(const json& c, std::size_t n, Collector& errs) {
  if (!c.is_object()) {
    errs.add("chart: expected an object or null");
    return std::nullopt;
  }
  reject_unknown(c, {"functions", "base", "base_box", "radial_box", "grid", "omega"}, "chart: ", errs);
  ChartSpec spec;
  Collector local;
  if (c.contains("functions") && !c["functions"].is_null()) {
    if (!c["functions"].is_array() || c["functions"].empty()) {
      local.add("chart.functions: expected a non-empty array of expressions");
    } else {
      for (std::size_t i = 0; i < c["functions"].size(); ++i) {
        std::string src;
        auto f = field(c["functions"][i], n, "chart.functions[" + std::to_string(i) + "]", local, &src);
        spec.function_sources.push_back(src);
        if (f) spec.functions.push_back(*f);
      }
    }
  }
  const std::size_t k = spec.function_sources.empty() ? 1 : spec.function_sources.size();
  if (k >= n) local.add("chart: the number of level functions must be below the dimension");
  const std::size_t m = n > k ? n - k : 0;

  if (!c.contains("radial_box")) {
    local.add("chart.radial_box: missing");
  } else if (auto box = intervals(c["radial_box"], "chart.radial_box", local)) {
    if (box->size() != k) local.add("chart.radial_box: expected " + std::to_string(k) + " ranges");
    spec.radial_box = *box;
  }
  std::vector<Interval> base_box;
  if (!c.contains("base_box")) {
    local.add("chart.base_box: missing");
  } else if (auto box = intervals(c["base_box"], "chart.base_box", local)) {
    if (box->size() != m) local.add("chart.base_box: expected " + std::to_string(m) + " ranges");
    base_box = *box;
  }
  if (!c.contains("base") || !c["base"].is_array() || c["base"].size() != n) {
    local.add("chart.base: expected " + std::to_string(n) + " expressions");
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      std::string src;
      auto f = field(c["base"][i], m, "chart.base[" + std::to_string(i) + "]", local, &src);
      spec.base_sources.push_back(src);
      if (f) spec.base.components.push_back(*f);
    }
  }
  spec.base.box = base_box;
  if (auto g = count(c, "grid", "chart.", local)) {
    if (*g < 2) local.add("chart.grid: needs at least 2 nodes per axis");
    spec.grid = *g;
  }
  if (c.contains("omega") && !c["omega"].is_null()) {
    if (!c["omega"].is_array() || c["omega"].size() != k) {
      local.add("chart.omega: expected " + std::to_string(k) + " coefficient expressions");
    } else {
      std::vector<ScalarField> comps;
      for (std::size_t i = 0; i < k; ++i) {
        std::string src;
        auto f = field(c["omega"][i], k, "chart.omega[" + std::to_string(i) + "]", local, &src);
        spec.omega_sources.push_back(src);
        if (f) comps.push_back(*f);
      }
      if (comps.size() == k) spec.omega = OneForm(std::move(comps));
    }
  }
  if (!local.empty()) {
    for (auto& p : local.take()) errs.add(std::move(p));
    return std::nullopt;
  }
  return spec;
}

ScalarField shift(const ScalarField& f, const Vector& center, std::size_t n) {
  const double f0 = f.eval(as_span(center));
  if (f0 == 0.0 || !f.expr()) return f;
  return ScalarField(n, *f.expr() - Expr::constant(f0));
}

}  // namespace

std::string to_string(Expectation e) { return e == Expectation::kStable ? "stable" : "unstable"; }

HypothesisProbe ProblemDefinition::make_probe(std::uint64_t seed) const {
  HypothesisProbe p;
  p.metric = metric;
  p.potential = potential;
  p.magnetic = magnetic;
  p.f = f;
  p.center = center;
  p.radius = probe.radius;
  p.delta_min = probe.delta_min;
  p.delta_max = probe.delta_max;
  p.samples = probe.samples;
  p.max_attempts = probe.max_attempts;
  p.seed = seed;
  return p;
}

ProblemDefinition parse_problem(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(e.what());
  }
  if (!doc.is_object()) throw ParseError("problem definition must be a JSON object");

  Collector errs;
  reject_unknown(doc,
                 {"name", "description", "dimension", "metric", "potential", "magnetic", "f", "center", "T",
                  "epsilons", "chart", "expected", "expected_certification", "tolerances", "probe",
                  "quasi_homogeneous"},
                 "", errs);

  ProblemDefinition def;
  if (doc.contains("name")) {
    if (doc["name"].is_string()) def.name = doc["name"].get<std::string>();
    else errs.add("name: expected a string");
  }
  if (doc.contains("description")) {
    if (doc["description"].is_string()) def.description = doc["description"].get<std::string>();
    else errs.add("description: expected a string");
  }

  if (!doc.contains("dimension") || !doc["dimension"].is_number_unsigned()) {
    errs.add("dimension: expected a positive integer");
    throw ValidationError(errs.take());
  }
  const std::size_t n = doc["dimension"].get<std::size_t>();
  if (n == 0 || n > kMaxDim) {
    errs.add("dimension: must be between 1 and " + std::to_string(kMaxDim));
    throw ValidationError(errs.take());
  }
  def.dimension = n;

  bool metric_ok = true;
  if (!doc.contains("metric") || (doc["metric"].is_string() && doc["metric"] == "euclidean")) {
    def.metric = Metric::euclidean(n);
  } else if (doc["metric"].is_array() && doc["metric"].size() == n) {
    std::vector<std::vector<ScalarField>> rows(n);
    std::ostringstream src;
    src << '[';
    for (std::size_t a = 0; a < n && metric_ok; ++a) {
      const auto& row = doc["metric"][a];
      if (!row.is_array() || row.size() != n) {
        errs.add("metric: row " + std::to_string(a + 1) + " must have " + std::to_string(n) + " entries");
        metric_ok = false;
        break;
      }
      src << (a ? ",[" : "[");
      for (std::size_t b = 0; b < n; ++b) {
        std::string text;
        auto f = field(row[b], n, "metric[" + std::to_string(a + 1) + "][" + std::to_string(b + 1) + "]", errs,
                       &text);
        src << (b ? "," : "") << json(text).dump();
        if (f) rows[a].push_back(*f);
        else metric_ok = false;
      }
      src << ']';
    }
    src << ']';
    def.metric_source = src.str();
    if (metric_ok) {
      try {
        def.metric = Metric::from_matrix(rows);
      } catch (const Error& e) {
        errs.add(std::string("metric: ") + e.what());
        metric_ok = false;
      }
    }
  } else {
    errs.add("metric: expected \"euclidean\" or an n x n array of expressions");
    metric_ok = false;
  }

  bool potential_ok = false;
  if (!doc.contains("potential")) {
    errs.add("potential: missing");
  } else if (auto U = field(doc["potential"], n, "potential", errs, &def.potential_source)) {
    def.potential = *U;
    potential_ok = true;
  }

  bool magnetic_ok = true;
  if (doc.contains("magnetic") && !doc["magnetic"].is_null()) {
    const auto& m = doc["magnetic"];
    if (!m.is_array() || m.size() != n) {
      errs.add("magnetic: expected null or " + std::to_string(n) + " component expressions");
      magnetic_ok = false;
    } else {
      std::vector<ScalarField> comps;
      for (std::size_t i = 0; i < n; ++i) {
        std::string text;
        auto c = field(m[i], n, "magnetic[" + std::to_string(i + 1) + "]", errs, &text);
        def.magnetic_sources.push_back(text);
        if (c) comps.push_back(*c);
        else magnetic_ok = false;
      }
      if (magnetic_ok) def.magnetic = OneForm(std::move(comps));
    }
  }

  std::optional<ScalarField> raw_f;
  if (!doc.contains("f")) errs.add("f: missing");
  else raw_f = field(doc["f"], n, "f", errs, &def.f_source);

  bool center_ok = false;
  if (!doc.contains("center") || !doc["center"].is_array() || doc["center"].size() != n) {
    errs.add("center: expected " + std::to_string(n) + " numbers");
  } else {
    def.center = Vector(static_cast<Eigen::Index>(n));
    center_ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (!doc["center"][i].is_number()) {
        errs.add("center: expected " + std::to_string(n) + " numbers");
        center_ok = false;
        break;
      }
      def.center[static_cast<Eigen::Index>(i)] = doc["center"][i].get<double>();
    }
  }

  if (auto T = number(doc, "T", "", errs)) {
    if (!(*T > 0.0) || !std::isfinite(*T)) errs.add("T: must be positive");
    def.horizon = *T;
  }

  if (doc.contains("epsilons") && !doc["epsilons"].is_null()) {
    const auto& e = doc["epsilons"];
    if (!e.is_array() || e.empty()) {
      errs.add("epsilons: expected a non-empty array of numbers");
    } else {
      def.epsilons.clear();
      bool ok = true;
      for (const auto& v : e) {
        if (!v.is_number()) {
          errs.add("epsilons: expected a non-empty array of numbers");
          ok = false;
          break;
        }
        def.epsilons.push_back(v.get<double>());
      }
      if (ok) {
        for (double v : def.epsilons)
          if (!(v > 0.0)) {
            errs.add("epsilons: every value must be positive");
            break;
          }
        for (std::size_t i = 1; i < def.epsilons.size(); ++i)
          if (!(def.epsilons[i] < def.epsilons[i - 1])) {
            errs.add("epsilons: must be strictly decreasing");
            break;
          }
      }
    }
  }

  if (doc.contains("tolerances") && !doc["tolerances"].is_null()) {
    const auto& t = doc["tolerances"];
    if (!t.is_object()) {
      errs.add("tolerances: expected an object");
    } else {
      reject_unknown(t, {"abs", "rel", "energy_drift"}, "tolerances: ", errs);
      if (auto v = number(t, "abs", "tolerances.", errs)) def.tolerances.abs = *v;
      if (auto v = number(t, "rel", "tolerances.", errs)) def.tolerances.rel = *v;
      if (auto v = number(t, "energy_drift", "tolerances.", errs)) def.tolerances.energy_drift = *v;
      if (!(def.tolerances.abs > 0.0) || !(def.tolerances.rel > 0.0) || !(def.tolerances.energy_drift > 0.0))
        errs.add("tolerances: values must be positive");
    }
  }

  if (doc.contains("probe") && !doc["probe"].is_null()) {
    const auto& p = doc["probe"];
    if (!p.is_object()) {
      errs.add("probe: expected an object");
    } else {
      reject_unknown(p, {"radius", "delta_min", "delta_max", "samples", "max_attempts"}, "probe: ", errs);
      if (auto v = number(p, "radius", "probe.", errs)) def.probe.radius = *v;
      if (auto v = number(p, "delta_min", "probe.", errs)) def.probe.delta_min = *v;
      if (auto v = number(p, "delta_max", "probe.", errs)) def.probe.delta_max = *v;
      if (auto v = count(p, "samples", "probe.", errs)) def.probe.samples = *v;
      if (auto v = count(p, "max_attempts", "probe.", errs)) def.probe.max_attempts = *v;
    }
  }
  if (!(def.probe.radius > 0.0)) errs.add("probe.radius: must be positive");
  if (!(def.probe.delta_min > 0.0) || !(def.probe.delta_min < def.probe.delta_max))
    errs.add("probe: need 0 < delta_min < delta_max");
  if (def.probe.samples < 100) errs.add("probe.samples: at least 100 are required");

  if (doc.contains("chart") && !doc["chart"].is_null()) def.chart = parse_chart(doc["chart"], n, errs);

  if (doc.contains("expected") && !doc["expected"].is_null()) {
    const auto& e = doc["expected"];
    if (e == "stable") def.expected = Expectation::kStable;
    else if (e == "unstable") def.expected = Expectation::kUnstable;
    else errs.add("expected: must be \"stable\", \"unstable\" or null");
  }

  if (doc.contains("expected_certification") && !doc["expected_certification"].is_null()) {
    const auto& e = doc["expected_certification"];
    if (!e.is_object()) {
      errs.add("expected_certification: expected an object");
    } else {
      reject_unknown(e, {"potential", "magnetic"}, "expected_certification: ", errs);
      if (e.contains("potential"))
        def.expected_certification.potential = verdict_from(e["potential"], "expected_certification.potential", errs);
      if (e.contains("magnetic"))
        def.expected_certification.magnetic = verdict_from(e["magnetic"], "expected_certification.magnetic", errs);
    }
  }

  if (doc.contains("quasi_homogeneous") && !doc["quasi_homogeneous"].is_null()) {
    const auto& q = doc["quasi_homogeneous"];
    if (!q.is_object() || !q.contains("alpha") || !q["alpha"].is_array() || q["alpha"].size() != n ||
        !q.contains("degree") || !q["degree"].is_number()) {
      errs.add("quasi_homogeneous: expected {\"alpha\": [" + std::to_string(n) + " numbers], \"degree\": number}");
    } else {
      QuasiHomogeneousSpec spec;
      bool ok = true;
      for (const auto& a : q["alpha"]) {
        if (!a.is_number()) ok = false;
        else spec.alpha.push_back(a.get<double>());
      }
      spec.degree = q["degree"].get<double>();
      if (!ok) errs.add("quasi_homogeneous.alpha: expected numbers");
      else if (!(spec.degree > 0.0)) errs.add("quasi_homogeneous.degree: must be positive");
      else def.quasi_homogeneous = spec;
    }
  }

  if (center_ok && potential_ok) {
    try {
      const double U0 = def.potential.eval(as_span(def.center));
      if (std::abs(U0) > kZeroPotential)
        errs.add("center is not a zero-potential point (U = " + format_double(U0) + ")");
    } catch (const Error& e) {
      errs.add(std::string("potential at center: ") + e.what());
    }
  }
  if (center_ok && metric_ok) {
    try {
      if (!def.metric.is_euclidean()) inverse_metric(def.metric.value(as_span(def.center)));
    } catch (const Error& e) {
      errs.add(std::string("metric at center: ") + e.what());
      metric_ok = false;
    }
  }
  if (center_ok && raw_f) {
    try {
      def.f = shift(*raw_f, def.center, n);
      if (metric_ok) {
        const auto p = def.f.grad_partials(as_span(def.center));
        const Vector d = Eigen::Map<const Vector>(p.data(), static_cast<Eigen::Index>(n));
        const Matrix g_inv = def.metric.is_euclidean() ? Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))
                                                       : inverse_metric(def.metric.value(as_span(def.center)));
        const double norm = std::sqrt(std::max(0.0, d.dot(g_inv * d)));
        if (norm < kMinCenterGradient)
          errs.add("f is not regular at the center (|grad f| = " + format_double(norm) + ")");
      }
    } catch (const Error& e) {
      errs.add(std::string("f at center: ") + e.what());
    }
  }

  if (!errs.empty()) throw ValidationError(errs.take());
  return def;
}

ProblemDefinition load_problem(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str());
}

}  // namespace lyap
