#include "lyap/certify.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <random>

#include "lyap/error.hpp"
#include "lyap/format.hpp"

namespace lyap {

namespace {

constexpr double kMinProbeGradient = 1e-6;
constexpr double kQuasiTol = 1e-9;
constexpr double kInnerTol = 1e-9;
constexpr double kBracketTol = 1e-5;
constexpr double kVanishTol = 1e-10;
constexpr double kRatioFloor = 1e-8;

double unit_double(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

/// Uniform point of the unit ball by rejection from the cube; false when
/// the cube draw fell outside.
bool draw_ball(std::mt19937_64& rng, Vector& u) {
  for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = 2.0 * unit_double(rng) - 1.0;
  return u.squaredNorm() <= 1.0;
}

std::size_t shell_count(const HypothesisProbe& probe) {
  std::size_t count = 0;
  for (double d = probe.delta_min; d <= probe.delta_max * (1.0 + 1e-12); d *= 10.0) ++count;
  return count;
}

Vector covector(const ScalarField& field, std::span<const double> x) {
  const auto p = field.grad_partials(x);
  return Eigen::Map<const Vector>(p.data(), static_cast<Eigen::Index>(p.size()));
}

Matrix inverse_at(const Metric& metric, std::span<const double> x) {
  if (metric.is_euclidean()) return Matrix::Identity(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(x.size()));
  return inverse_metric(metric.value(x));
}

std::string point_text(const Vector& x) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i) s += ", ";
    s += format_double(x[i]);
  }
  return s + ")";
}

using RatioFn = double (*)(const HypothesisProbe&, std::span<const double>);

/// Samples every shell concurrently and fills in the ratio columns.
std::vector<ShellRow> sample_all(const HypothesisProbe& probe, RatioFn ratio) {
  const std::size_t count = shell_count(probe);
  std::vector<std::future<ShellRow>> jobs;
  jobs.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    jobs.push_back(std::async(std::launch::async, [&probe, ratio, j] {
      ShellRow row = sample_shell(probe, j);
      row.ratios.clear();
      row.max_ratio = 0.0;
      double sum = 0.0;
      for (const auto& p : row.points) {
        const double r = ratio(probe, as_span(p));
        row.ratios.push_back(r);
        sum += r;
        if (row.ratios.size() == 1 || r > row.max_ratio) {
          row.max_ratio = r;
          row.argmax = p;
        }
      }
      row.mean_ratio = sum / static_cast<double>(row.ratios.size());
      return row;
    }));
  }
  std::vector<ShellRow> rows;
  rows.reserve(count);
  for (auto& j : jobs) rows.push_back(j.get());
  std::reverse(rows.begin(), rows.end());
  return rows;
}

ConditionResult judge(const HypothesisProbe& probe, std::vector<ShellRow> rows) {
  ConditionResult out;
  std::vector<double> maxima;
  for (const auto& r : rows) maxima.push_back(r.max_ratio);
  std::size_t start = 0;
  out.verdict = shell_verdict(maxima, &start);
  out.constant = maxima.empty() ? 0.0 : *std::max_element(maxima.begin(), maxima.end());
  if (out.verdict == Verdict::kRefuted) {
    const ShellRow& last = rows[start + 3];
    out.witness = Witness{last.argmax, last.max_ratio, probe.potential.eval(as_span(last.argmax))};
  }
  out.shells = std::move(rows);
  return out;
}

void require_regular_f(const HypothesisProbe& probe, const std::vector<ShellRow>& rows) {
  for (const auto& row : rows) {
    for (const auto& p : row.points) {
      const Vector df = covector(probe.f, as_span(p));
      const double norm = std::sqrt(std::max(0.0, df.dot(inverse_at(probe.metric, as_span(p)) * df)));
      if (norm < kMinProbeGradient)
        throw GradientTooSmall("|grad f| = " + format_double(norm) + " at " + point_text(p));
    }
  }
}

class PullbackComponentBody final : public FieldBody {
 public:
  PullbackComponentBody(std::vector<ScalarField> F, OneForm omega, std::size_t index)
      : F_(std::move(F)), omega_(std::move(omega)), index_(index) {}

  double eval(std::span<const double> x) const override {
    const std::vector<Dual1> s = seed_dual(x);
    std::vector<double> r;
    std::vector<double> dF;
    for (const auto& f : F_) {
      const Dual1 v = f.eval(std::span<const Dual1>(s));
      r.push_back(v.value);
      dF.push_back(v.d[index_]);
    }
    double sum = 0.0;
    for (std::size_t l = 0; l < F_.size(); ++l) sum += omega_[l].eval(std::span<const double>(r)) * dF[l];
    return sum;
  }

  Dual1 eval(std::span<const Dual1> x) const override {
    std::vector<Dual2> s;
    s.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      Dual2 v(x[i], x.size());
      v.d[i] = Dual1(1.0);
      s.push_back(v);
    }
    std::vector<Dual1> r;
    std::vector<Dual1> dF;
    for (const auto& f : F_) {
      const Dual2 v = f.eval(std::span<const Dual2>(s));
      r.push_back(v.value);
      dF.push_back(v.d[index_]);
    }
    Dual1 sum(0.0);
    for (std::size_t l = 0; l < F_.size(); ++l) sum = sum + omega_[l].eval(std::span<const Dual1>(r)) * dF[l];
    return sum;
  }

  Dual2 eval(std::span<const Dual2>) const override {
    throw DomainError("third derivatives are not supported");
  }

  std::string describe() const override {
    std::string s;
    for (std::size_t l = 0; l < F_.size(); ++l) {
      if (l) s += " + ";
      s += "c" + std::to_string(l + 1) + "(F) * d" + std::to_string(index_ + 1) + "(" + F_[l].describe() + ")";
    }
    return s.empty() ? "0" : s;
  }

 private:
  std::vector<ScalarField> F_;
  OneForm omega_;
  std::size_t index_;
};

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::kCertified:
      return "certified";
    case Verdict::kRefuted:
      return "refuted";
    case Verdict::kInconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

void HypothesisProbe::validate() const {
  std::vector<std::string> problems;
  const std::size_t n = metric.dimension();
  if (potential.dimension() != n) problems.push_back("potential dimension does not match the metric");
  if (f.dimension() != n) problems.push_back("f dimension does not match the metric");
  if (magnetic && magnetic->dimension() != n) problems.push_back("magnetic form dimension does not match the metric");
  if (static_cast<std::size_t>(center.size()) != n) problems.push_back("center dimension does not match the metric");
  if (!(radius > 0.0)) problems.push_back("probe radius must be positive");
  if (!(delta_min > 0.0) || !(delta_min < delta_max)) problems.push_back("shell bounds need 0 < delta_min < delta_max");
  if (samples < 100) problems.push_back("at least 100 samples per shell are required");
  if (max_attempts < samples) problems.push_back("attempt budget is below the sample count");
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

Verdict shell_verdict(const std::vector<double>& raw, std::size_t* run_start) {
  std::vector<double> maxima = raw;
  for (double& m : maxima)
    if (std::abs(m) <= kRatioFloor) m = 0.0;
  for (std::size_t s = 0; s + 3 < maxima.size(); ++s) {
    bool rising = true;
    for (std::size_t i = s; i < s + 3; ++i) rising = rising && maxima[i + 1] > maxima[i];
    if (rising && maxima[s + 3] >= 10.0 * maxima[s]) {
      if (run_start) *run_start = s;
      return Verdict::kRefuted;
    }
  }
  if (maxima.empty()) return Verdict::kInconclusive;
  std::vector<double> sorted = maxima;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  const double median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  return sorted.back() <= 2.0 * median ? Verdict::kCertified : Verdict::kInconclusive;
}

ShellRow sample_shell(const HypothesisProbe& probe, std::size_t shell_index) {
  ShellRow row;
  row.lower = probe.delta_min * std::pow(10.0, static_cast<double>(shell_index));
  row.upper = 10.0 * row.lower;
  auto rng = make_rng(probe.seed, shell_index);
  Vector u(probe.center.size());
  while (row.points.size() < probe.samples && row.attempts < probe.max_attempts) {
    ++row.attempts;
    if (!draw_ball(rng, u)) continue;
    Vector x = probe.center + probe.radius * u;
    double U = 0.0;
    try {
      U = probe.potential.eval(as_span(x));
    } catch (const DomainError&) {
      continue;
    }
    if (U >= row.lower && U <= row.upper) row.points.push_back(std::move(x));
  }
  if (row.points.empty()) {
    throw EmptyShell("no point with " + format_double(row.lower) + " <= U <= " + format_double(row.upper) +
                     " in " + std::to_string(row.attempts) + " attempts within radius " +
                     format_double(probe.radius));
  }
  return row;
}

double potential_ratio(const HypothesisProbe& probe, std::span<const double> x) {
  std::vector<double> dU(x.size());
  const double U = probe.potential.value_and_partials(x, dU);
  const Vector grad_f = riemannian_gradient(probe.metric, probe.f, x);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += dU[i] * grad_f[static_cast<Eigen::Index>(i)];
  return std::abs(s) / U;
}

double magnetic_ratio(const HypothesisProbe& probe, std::span<const double> x) {
  if (!probe.magnetic) return 0.0;
  const Vector grad_f = riemannian_gradient(probe.metric, probe.f, x);
  return contracted_form_norm(probe.metric, *probe.magnetic, grad_f, x) / std::sqrt(probe.potential.eval(x));
}

double field_ratio(const HypothesisProbe& probe, std::span<const double> x) {
  if (!probe.magnetic) return 0.0;
  const Matrix F = magnetic_tensor(*probe.magnetic, x);
  return two_form_norm(F, inverse_at(probe.metric, x)) / std::sqrt(probe.potential.eval(x));
}

ConditionResult certify_potential_condition(const HypothesisProbe& probe) {
  probe.validate();
  auto rows = sample_all(probe, &potential_ratio);
  require_regular_f(probe, rows);
  return judge(probe, std::move(rows));
}

MagneticResult certify_magnetic_condition(const HypothesisProbe& probe) {
  probe.validate();
  MagneticResult out;
  if (!probe.magnetic) {
    out.contracted.verdict = Verdict::kCertified;
    out.field.verdict = Verdict::kCertified;
    return out;
  }
  auto rows = sample_all(probe, &magnetic_ratio);
  require_regular_f(probe, rows);
  std::vector<ShellRow> field_rows = rows;
  for (auto& row : field_rows) {
    double sum = 0.0;
    for (std::size_t i = 0; i < row.points.size(); ++i) {
      const double r = field_ratio(probe, as_span(row.points[i]));
      row.ratios[i] = r;
      sum += r;
      if (i == 0 || r > row.max_ratio) {
        row.max_ratio = r;
        row.argmax = row.points[i];
      }
    }
    row.mean_ratio = sum / static_cast<double>(row.points.size());
  }
  const ShellRow& nearest = rows.back();
  for (const auto& p : nearest.points) {
    const Vector grad_f = riemannian_gradient(probe.metric, probe.f, as_span(p));
    out.characteristic_residual = std::max(
        out.characteristic_residual, contracted_form_norm(probe.metric, *probe.magnetic, grad_f, as_span(p)));
    const Matrix F = magnetic_tensor(*probe.magnetic, as_span(p));
    out.max_field_norm = std::max(out.max_field_norm, two_form_norm(F, inverse_at(probe.metric, as_span(p))));
  }
  out.field_vanishes = out.max_field_norm <= kVanishTol;
  out.contracted = judge(probe, std::move(rows));
  out.field = judge(probe, std::move(field_rows));
  return out;
}

ProofConstants proof_constants(const HypothesisProbe& probe, const ConditionResult& potential,
                               const std::optional<MagneticResult>& magnetic) {
  ProofConstants c;
  c.k2 = potential.constant;
  if (magnetic) c.k1 = magnetic->contracted.constant * magnetic->contracted.constant;
  const Vector df0 = covector(probe.f, as_span(probe.center));
  c.center_gradient_norm = std::sqrt(df0.dot(inverse_at(probe.metric, as_span(probe.center)) * df0));
  c.min_gradient_norm = std::numeric_limits<double>::infinity();
  for (const auto& row : potential.shells) {
    for (const auto& p : row.points) {
      const Vector df = covector(probe.f, as_span(p));
      c.min_gradient_norm =
          std::min(c.min_gradient_norm, std::sqrt(df.dot(inverse_at(probe.metric, as_span(p)) * df)));
      const double top = probe.metric.is_euclidean()
                             ? 1.0
                             : Eigen::SelfAdjointEigenSolver<Matrix>(probe.metric.value(as_span(p)))
                                   .eigenvalues()
                                   .maxCoeff();
      c.metric_max_eigenvalue = std::max(c.metric_max_eigenvalue, top);
    }
  }
  if (!std::isfinite(c.min_gradient_norm)) c.min_gradient_norm = c.center_gradient_norm;
  if (c.metric_max_eigenvalue == 0.0) c.metric_max_eigenvalue = 1.0;
  const double m = c.min_gradient_norm;
  const double g = c.center_gradient_norm;
  c.c1 = std::sqrt(c.k1 / (std::pow(m, 4) * 2.0 * c.metric_max_eigenvalue)) * g;
  c.c2 = c.k2 / (m * m) * g * g / 2.0;
  return c;
}

ScalarField QuasiHomogeneousSpec::induced_f() const {
  Expr sum = Expr::constant(0.0);
  bool first = true;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (alpha[i] == 0.0) continue;
    Expr term = Expr::constant(alpha[i] / 2.0) * Expr::int_pow(Expr::variable(i), 2);
    sum = first ? term : sum + term;
    first = false;
  }
  return ScalarField(alpha.size(), sum);
}

QuasiHomogeneousResult check_quasi_homogeneous(const ScalarField& potential, const QuasiHomogeneousSpec& spec,
                                               std::size_t samples, std::uint64_t seed, double half_width) {
  const std::size_t n = potential.dimension();
  std::vector<std::string> problems;
  if (spec.alpha.size() != n) problems.push_back("weight vector length does not match the dimension");
  if (std::all_of(spec.alpha.begin(), spec.alpha.end(), [](double a) { return a == 0.0; }))
    problems.push_back("weight vector must be nonzero");
  if (!(spec.degree > 0.0)) problems.push_back("degree must be positive");
  if (!problems.empty()) throw ValidationError(std::move(problems));

  QuasiHomogeneousResult out;
  auto rng = make_rng(seed, 0);
  std::vector<double> x(n), d(n);
  for (std::size_t s = 0; s < samples; ++s) {
    for (auto& xi : x) xi = half_width * (2.0 * unit_double(rng) - 1.0);
    const double U = potential.value_and_partials(x, d);
    double euler = 0.0;
    for (std::size_t i = 0; i < n; ++i) euler += spec.alpha[i] * x[i] * d[i];
    const double r = std::abs(euler - spec.degree * U) / (1.0 + std::abs(U));
    if (s == 0 || r > out.max_residual) {
      out.max_residual = r;
      out.worst_point = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(n));
    }
  }
  out.samples = samples;
  out.verdict = out.max_residual <= kQuasiTol ? Verdict::kCertified : Verdict::kRefuted;
  return out;
}

Vector lie_bracket_fd(const Metric& metric, const ScalarField& fi, const ScalarField& fj,
                      std::span<const double> x, double h) {
  const Vector p = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
  const Vector X = normalized_gradient(metric, fi, x);
  const Vector Y = normalized_gradient(metric, fj, x);
  auto directional = [&](const ScalarField& field, const Vector& dir) {
    const Vector plus = p + h * dir;
    const Vector minus = p - h * dir;
    return Vector((normalized_gradient(metric, field, as_span(plus)) -
                   normalized_gradient(metric, field, as_span(minus))) /
                  (2.0 * h));
  };
  return directional(fj, X) - directional(fi, Y);
}

OrthogonalCommutingResult check_orthogonal_commuting(const Metric& metric, const std::vector<ScalarField>& F,
                                                     const std::vector<Vector>& points) {
  OrthogonalCommutingResult out;
  double worst = -1.0;
  for (const auto& p : points) {
    const Matrix g_inv = inverse_at(metric, as_span(p));
    std::vector<Vector> d;
    for (const auto& f : F) {
      d.push_back(covector(f, as_span(p)));
      const double norm = std::sqrt(std::max(0.0, d.back().dot(g_inv * d.back())));
      if (norm < kMinGradientNorm) throw GradientTooSmall("|grad F| = " + format_double(norm) + " at " + point_text(p));
    }
    for (std::size_t i = 0; i < F.size(); ++i) {
      for (std::size_t j = i + 1; j < F.size(); ++j) {
        const double inner = std::abs(d[i].dot(g_inv * d[j]));
        const double bracket = lie_bracket_fd(metric, F[i], F[j], as_span(p)).norm();
        out.max_inner_product = std::max(out.max_inner_product, inner);
        out.max_bracket = std::max(out.max_bracket, bracket);
        const double score = std::max(inner / kInnerTol, bracket / kBracketTol);
        if (score > worst) {
          worst = score;
          out.worst_point = p;
        }
      }
    }
  }
  out.samples = points.size();
  out.verdict = out.max_inner_product <= kInnerTol && out.max_bracket <= kBracketTol ? Verdict::kCertified
                                                                                       : Verdict::kRefuted;
  return out;
}

std::vector<Vector> ball_samples(const Vector& center, double radius, std::size_t count, std::uint64_t seed) {
  auto rng = make_rng(seed, 0);
  std::vector<Vector> out;
  Vector u(center.size());
  while (out.size() < count) {
    if (draw_ball(rng, u)) out.push_back(center + radius * u);
  }
  return out;
}

OneForm build_pullback_magnetic(const std::vector<ScalarField>& F, const OneForm& omega) {
  if (F.empty()) throw InvalidArgument("pullback needs at least one function");
  if (omega.dimension() != F.size()) throw InvalidArgument("form dimension must equal the number of functions");
  const std::size_t n = F.front().dimension();
  for (const auto& f : F)
    if (f.dimension() != n) throw InvalidArgument("pullback functions disagree on dimension");
  for (const auto& c : omega.components())
    if (c.dimension() != F.size()) throw InvalidArgument("form coefficients must be functions on R^k");
  std::vector<ScalarField> components;
  for (std::size_t a = 0; a < n; ++a)
    components.emplace_back(n, std::make_shared<PullbackComponentBody>(F, omega, a));
  return OneForm(std::move(components));
}

ContractionReport chart_contracted_form(const AdaptedChart& chart, const OneForm& form,
                                        std::size_t tangential_index, std::size_t per_axis) {
  const std::size_t k = chart.radial_dimension();
  if (tangential_index >= chart.base_dimension()) throw InvalidArgument("tangential index out of range");
  ContractionReport out;
  double worst = -1.0;
  for (const auto& xi : chart.grid(per_axis)) {
    const Vector x = chart(as_span(xi));
    const Matrix J = chart.jacobian(as_span(xi));
    const Matrix G = J.transpose() * chart.metric().value(as_span(x)) * J;
    const Matrix Fc = J.transpose() * magnetic_tensor(form, as_span(x)) * J;
    const Vector v = inverse_metric(G).col(static_cast<Eigen::Index>(k + tangential_index));
    const double c = contract_two_form(Fc, v).cwiseAbs().maxCoeff();
    out.max_component = std::max(out.max_component, c);
    if (c > worst) {
      worst = c;
      out.worst_point = xi;
    }
    ++out.points;
  }
  return out;
}

}  // namespace lyap
