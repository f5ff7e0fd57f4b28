#include "lyap/charts.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>

#include "lyap/error.hpp"
#include "lyap/format.hpp"
#include "lyap/ode.hpp"

namespace lyap {

namespace {

constexpr double kIdentityTol = 1e-8;
constexpr double kOrderTol = 1e-7;
constexpr double kBlockTol = 1e-6;
constexpr double kKeyGrid = 1e-12;
constexpr double kFlowStepLength = 0.01;
constexpr std::size_t kMinFlowSteps = 16;

std::string point_text(const Vector& x) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i) s += ", ";
    s += format_double(x[i]);
  }
  return s + ")";
}

std::vector<double> axis_nodes(Interval range, std::size_t count) {
  std::vector<double> nodes(count);
  if (count == 1) {
    nodes[0] = 0.5 * (range.first + range.second);
    return nodes;
  }
  for (std::size_t i = 0; i < count; ++i) {
    const double s = static_cast<double>(i) / static_cast<double>(count - 1);
    nodes[i] = range.first + s * (range.second - range.first);
  }
  return nodes;
}

std::vector<Vector> tensor_grid(const std::vector<Interval>& box, std::size_t per_axis) {
  std::vector<std::vector<double>> axes;
  for (const auto& r : box) axes.push_back(axis_nodes(r, per_axis));
  std::vector<Vector> out;
  if (box.empty()) return out;
  std::vector<std::size_t> idx(box.size(), 0);
  while (true) {
    Vector p(static_cast<Eigen::Index>(box.size()));
    for (std::size_t d = 0; d < box.size(); ++d) p[static_cast<Eigen::Index>(d)] = axes[d][idx[d]];
    out.push_back(std::move(p));
    std::size_t d = box.size();
    while (d > 0) {
      --d;
      if (++idx[d] < per_axis) break;
      idx[d] = 0;
      if (d == 0) return out;
    }
  }
}

/// Jacobian with its condition number; throws when numerically singular.
Matrix checked_jacobian(const AdaptedChart& chart, const Vector& xi, double* condition) {
  Matrix J = chart.jacobian(as_span(xi));
  Eigen::JacobiSVD<Matrix> svd(J);
  const auto& s = svd.singularValues();
  const double smax = s.maxCoeff();
  const double smin = s.minCoeff();
  if (!(smin > 1e-12 * smax) || !std::isfinite(smax)) {
    throw SingularJacobian("Jacobian of the chart is singular at " + point_text(xi));
  }
  if (condition) *condition = smax / smin;
  return J;
}

void check_inputs(const Metric& metric, const std::vector<ScalarField>& functions, const BaseSurfaceMap& base,
                  const std::vector<Interval>& radial_box) {
  const std::size_t n = metric.dimension();
  if (functions.empty()) throw InvalidArgument("a chart needs at least one level function");
  if (functions.size() != radial_box.size())
    throw InvalidArgument("radial box must have one range per level function");
  if (functions.size() >= n) throw InvalidArgument("the number of level functions must be below the dimension");
  if (base.ambient_dimension() != n) throw InvalidArgument("base map must have one component per coordinate");
  if (base.base_dimension() + functions.size() != n)
    throw InvalidArgument("base dimension plus level functions must equal the dimension");
  for (const auto& f : functions)
    if (f.dimension() != n) throw InvalidArgument("level function dimension does not match the metric");
  for (const auto& c : base.components)
    if (c.dimension() != base.base_dimension()) throw InvalidArgument("base map component has the wrong arity");
  for (const auto& r : radial_box)
    if (!(r.first <= r.second)) throw InvalidArgument("radial range must be ordered");
  for (const auto& r : base.box)
    if (!(r.first <= r.second)) throw InvalidArgument("base range must be ordered");
}

ChartBuild build_common(const Metric& metric, const std::vector<ScalarField>& functions,
                        const BaseSurfaceMap& base, const std::vector<Interval>& radial_box,
                        std::size_t per_axis) {
  check_inputs(metric, functions, base, radial_box);
  if (per_axis == 0) throw InvalidArgument("grid needs at least one node per axis");
  AdaptedChart chart(metric, functions, base, radial_box);
  ChartReport rep;
  rep.per_axis = per_axis;
  const std::size_t k = functions.size();
  const std::size_t n = metric.dimension();

  for (const auto& y : tensor_grid(base.box, per_axis)) {
    const Vector x = base(as_span(y));
    for (std::size_t i = 0; i < k; ++i) {
      const double r = std::abs(functions[i].eval(as_span(x)));
      rep.max_base_residual = std::max(rep.max_base_residual, r);
      if (r > kIdentityTol) {
        throw IdentityViolation("base map leaves the zero level set at y = " + point_text(y) +
                                ", residual " + format_double(r));
      }
    }
  }

  const auto nodes = chart.grid(per_axis);
  rep.points = nodes.size();
  std::vector<Vector> images;
  images.reserve(nodes.size());
  rep.min_condition = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> reversed(k);
  for (std::size_t i = 0; i < k; ++i) reversed[i] = i;

  for (const auto& xi : nodes) {
    const Vector x = chart(as_span(xi));
    images.push_back(x);
    for (std::size_t i = 0; i < k; ++i) {
      const double r = std::abs(functions[i].eval(as_span(x)) - xi[static_cast<Eigen::Index>(i)]);
      if (r > rep.max_identity_residual) {
        rep.max_identity_residual = r;
        rep.worst_identity_point = xi;
      }
      if (r > kIdentityTol) {
        throw IdentityViolation("level function " + std::to_string(i + 1) + " misses its chart value at " +
                                point_text(xi) + ", residual " + format_double(r));
      }
    }

    double cond = 0.0;
    const Matrix J = checked_jacobian(chart, xi, &cond);
    rep.min_condition = std::min(rep.min_condition, cond);
    rep.max_condition = std::max(rep.max_condition, cond);
    for (std::size_t i = 0; i < k; ++i) {
      const auto p = functions[i].grad_partials(as_span(x));
      const Vector dF = Eigen::Map<const Vector>(p.data(), static_cast<Eigen::Index>(n));
      for (std::size_t a = k; a < n; ++a) {
        const double d = std::abs(dF.dot(J.col(static_cast<Eigen::Index>(a))));
        rep.max_tangential_derivative = std::max(rep.max_tangential_derivative, d);
      }
    }

    for (std::size_t i = 0; i < k; ++i) {
      const auto& r = radial_box[i];
      const double t = 0.25 * std::max(std::abs(r.first), std::abs(r.second));
      if (t == 0.0) continue;
      const Vector moved = chart.flow(i, x, t);
      for (std::size_t j = 0; j < k; ++j) {
        const double expected = (i == j ? t : 0.0) + functions[j].eval(as_span(x));
        const double res = std::abs(functions[j].eval(as_span(moved)) - expected);
        rep.max_additivity_residual = std::max(rep.max_additivity_residual, res);
        if (res > kIdentityTol) {
          throw IdentityViolation("flow of level function " + std::to_string(i + 1) + " breaks additivity at " +
                                  point_text(x) + ", residual " + format_double(res));
        }
      }
    }

    if (k > 1) {
      const Vector swapped = chart.evaluate_ordered(as_span(xi), reversed);
      const double d = (swapped - x).norm();
      rep.max_order_swap = std::max(rep.max_order_swap, d);
      if (d > kOrderTol) {
        throw OrderDependence("flow order changes the chart by " + format_double(d) + " at " + point_text(xi));
      }
    }
  }

  rep.min_pairwise_distance = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < images.size(); ++a)
    for (std::size_t b = a + 1; b < images.size(); ++b)
      rep.min_pairwise_distance = std::min(rep.min_pairwise_distance, (images[a] - images[b]).norm());
  if (images.size() < 2) rep.min_pairwise_distance = 0.0;
  rep.injective = images.size() < 2 || rep.min_pairwise_distance >= 1e-10;
  if (nodes.empty()) rep.min_condition = 0.0;
  return ChartBuild{std::move(chart), std::move(rep)};
}

}  // namespace

Vector normalized_gradient(const Metric& metric, const ScalarField& f, std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> p(n);
  f.value_and_partials(x, p);
  const Vector d = Eigen::Map<const Vector>(p.data(), static_cast<Eigen::Index>(n));
  const Vector grad = metric.is_euclidean() ? d : Vector(inverse_metric(metric.value(x)) * d);
  const double norm2 = d.dot(grad);
  if (!(std::sqrt(std::max(norm2, 0.0)) >= kMinGradientNorm)) {
    Vector at = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(n));
    throw GradientTooSmall("|grad f| = " + format_double(std::sqrt(std::max(norm2, 0.0))) + " at " +
                           point_text(at));
  }
  return grad / norm2;
}

Vector flow_normalized_gradient(const Metric& metric, const ScalarField& f, const Vector& start, double t,
                                double tol) {
  if (t == 0.0) return start;
  DormandPrince solver([&](double, const Vector& y, Vector& dy) { dy = normalized_gradient(metric, f, as_span(y)); });
  StepControl control;
  control.abs_tol = tol;
  control.rel_tol = tol;
  Vector end = start;
  solver.integrate(0.0, start, t, control, [&](const DenseSegment& seg) { end = seg.y1(); });
  return end;
}

Vector BaseSurfaceMap::operator()(std::span<const double> y) const {
  if (y.size() != base_dimension()) throw InvalidArgument("base point has the wrong dimension");
  Vector x(static_cast<Eigen::Index>(components.size()));
  for (std::size_t i = 0; i < components.size(); ++i) x[static_cast<Eigen::Index>(i)] = components[i].eval(y);
  return x;
}

BaseSurfaceMap BaseSurfaceMap::parse(const std::vector<std::string>& components, std::vector<Interval> box) {
  BaseSurfaceMap map;
  for (const auto& c : components) map.components.push_back(ScalarField::parse(c, box.size()));
  map.box = std::move(box);
  return map;
}

std::size_t AdaptedChart::KeyHash::operator()(const std::vector<std::int64_t>& k) const noexcept {
  std::size_t h = 1469598103934665603ull;
  for (auto v : k) h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

AdaptedChart::AdaptedChart(Metric metric, std::vector<ScalarField> functions, BaseSurfaceMap base,
                           std::vector<Interval> radial_box)
    : metric_(std::move(metric)),
      functions_(std::move(functions)),
      base_(std::move(base)),
      radial_box_(std::move(radial_box)),
      cache_(std::make_shared<Cache>()) {
  check_inputs(metric_, functions_, base_, radial_box_);
  double reach = 0.0;
  for (const auto& r : radial_box_) reach = std::max({reach, std::abs(r.first), std::abs(r.second)});
  flow_steps_ = std::max(kMinFlowSteps, static_cast<std::size_t>(std::ceil(1.5 * reach / kFlowStepLength)));
}

Vector AdaptedChart::flow(std::size_t i, const Vector& x, double t) const {
  if (t == 0.0) return x;
  const ScalarField& f = functions_.at(i);
  DormandPrince solver([&](double, const Vector& y, Vector& dy) { dy = normalized_gradient(metric_, f, as_span(y)); });
  return solver.integrate_fixed(0.0, x, t, flow_steps_);
}

Vector AdaptedChart::evaluate_ordered(std::span<const double> xi, const std::vector<std::size_t>& order) const {
  const std::size_t k = radial_dimension();
  if (xi.size() != dimension()) throw InvalidArgument("chart point has the wrong dimension");
  Vector x = base_(xi.subspan(k));
  for (std::size_t i : order) x = flow(i, x, xi[i]);
  return x;
}

Vector AdaptedChart::operator()(std::span<const double> xi) const {
  if (xi.size() != dimension()) throw InvalidArgument("chart point has the wrong dimension");
  std::vector<std::int64_t> key;
  key.reserve(xi.size());
  bool cacheable = true;
  for (double v : xi) {
    const double q = v / kKeyGrid;
    if (!(std::abs(q) < 9.0e18)) {
      cacheable = false;
      break;
    }
    key.push_back(std::llround(q));
  }
  if (cacheable) {
    std::shared_lock lock(cache_->mutex);
    auto it = cache_->values.find(key);
    if (it != cache_->values.end()) return it->second;
  }
  std::vector<std::size_t> order(radial_dimension());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = order.size() - 1 - i;
  Vector x = evaluate_ordered(xi, order);
  if (cacheable) {
    std::unique_lock lock(cache_->mutex);
    cache_->values.emplace(std::move(key), x);
  }
  return x;
}

Matrix AdaptedChart::jacobian(std::span<const double> xi) const {
  const std::size_t n = dimension();
  Matrix J(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<double> p(xi.begin(), xi.end());
  for (std::size_t j = 0; j < n; ++j) {
    const double h = 1e-5 * std::max(1.0, std::abs(xi[j]));
    p[j] = xi[j] + h;
    const Vector plus = (*this)(p);
    p[j] = xi[j] - h;
    const Vector minus = (*this)(p);
    p[j] = xi[j];
    J.col(static_cast<Eigen::Index>(j)) = (plus - minus) / (2.0 * h);
  }
  return J;
}

std::vector<Vector> AdaptedChart::grid(std::size_t per_axis) const {
  std::vector<Interval> box = radial_box_;
  box.insert(box.end(), base_.box.begin(), base_.box.end());
  return tensor_grid(box, per_axis);
}

std::size_t AdaptedChart::cache_size() const {
  std::shared_lock lock(cache_->mutex);
  return cache_->values.size();
}

ChartBuild build_chart(const Metric& metric, const ScalarField& f, const BaseSurfaceMap& base, Interval z_range,
                       std::size_t per_axis) {
  return build_common(metric, {f}, base, {z_range}, per_axis);
}

ChartBuild build_multi_chart(const Metric& metric, const std::vector<ScalarField>& functions,
                             const BaseSurfaceMap& base, const std::vector<Interval>& radial_box,
                             std::size_t per_axis) {
  return build_common(metric, functions, base, radial_box, per_axis);
}

Matrix pullback_metric(const AdaptedChart& chart, std::span<const double> xi) {
  const Vector x = chart(xi);
  const Matrix J = chart.jacobian(xi);
  return J.transpose() * chart.metric().value(as_span(x)) * J;
}

BlockReport pullback_metric_block_check(const AdaptedChart& chart, std::size_t per_axis) {
  BlockReport rep;
  const std::size_t k = chart.radial_dimension();
  const std::size_t n = chart.dimension();
  double worst = -1.0;
  for (const auto& xi : chart.grid(per_axis)) {
    const Matrix J = checked_jacobian(chart, xi, nullptr);
    const Vector x = chart(as_span(xi));
    const Matrix G = J.transpose() * chart.metric().value(as_span(x)) * J;
    double local = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t a = k; a < n; ++a) {
        const double v = std::abs(G(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)));
        rep.max_off_block = std::max(rep.max_off_block, v);
        local = std::max(local, v);
      }
      for (std::size_t j = i + 1; j < k; ++j) {
        const double v = std::abs(G(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        rep.max_radial_off_diagonal = std::max(rep.max_radial_off_diagonal, v);
        local = std::max(local, v);
      }
    }
    if (local > worst) {
      worst = local;
      rep.worst_point = xi;
    }
  }
  rep.pass = rep.max_off_block <= kBlockTol && rep.max_radial_off_diagonal <= kBlockTol;
  return rep;
}

}  // namespace lyap
