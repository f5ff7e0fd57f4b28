#include "lyap/geometry.hpp"

#include <cmath>

#include "lyap/error.hpp"

namespace lyap {

Metric Metric::euclidean(std::size_t dimension) {
  if (dimension == 0 || dimension > kMaxDim) throw InvalidArgument("metric dimension out of range");
  Metric m;
  m.dim_ = dimension;
  m.euclidean_ = true;
  for (std::size_t a = 0; a < dimension; ++a)
    for (std::size_t b = a; b < dimension; ++b)
      m.upper_.push_back(ScalarField::constant(dimension, a == b ? 1.0 : 0.0));
  return m;
}

Metric Metric::from_upper(std::size_t dimension, std::vector<ScalarField> upper) {
  if (dimension == 0 || dimension > kMaxDim) throw InvalidArgument("metric dimension out of range");
  if (upper.size() != dimension * (dimension + 1) / 2)
    throw InvalidArgument("metric upper triangle has the wrong number of entries");
  for (const auto& f : upper)
    if (f.dimension() != dimension) throw InvalidArgument("metric entry dimension mismatch");
  Metric m;
  m.dim_ = dimension;
  m.euclidean_ = false;
  m.upper_ = std::move(upper);
  return m;
}

Metric Metric::from_matrix(const std::vector<std::vector<ScalarField>>& entries) {
  const std::size_t n = entries.size();
  std::vector<ScalarField> upper;
  for (std::size_t a = 0; a < n; ++a) {
    if (entries[a].size() != n) throw InvalidArgument("metric matrix is not square");
    for (std::size_t b = a; b < n; ++b) {
      const auto& lower = entries[b][a];
      const auto& up = entries[a][b];
      const bool same = (up.expr() && lower.expr()) ? *up.expr() == *lower.expr()
                                                     : up.describe() == lower.describe();
      if (!same)
        throw InvalidArgument("metric entries (" + std::to_string(a + 1) + "," + std::to_string(b + 1) +
                              ") and (" + std::to_string(b + 1) + "," + std::to_string(a + 1) + ") differ");
      upper.push_back(up);
    }
  }
  return from_upper(n, std::move(upper));
}

std::size_t Metric::index(std::size_t a, std::size_t b) const {
  if (a > b) std::swap(a, b);
  return a * dim_ - a * (a - 1) / 2 + (b - a);
}

const ScalarField& Metric::entry(std::size_t a, std::size_t b) const { return upper_[index(a, b)]; }

Matrix Metric::value(std::span<const double> x) const {
  if (x.size() != dim_) throw InvalidArgument("metric evaluated at a point of the wrong dimension");
  if (euclidean_) return Matrix::Identity(dim_, dim_);
  Matrix g(dim_, dim_);
  for (std::size_t a = 0; a < dim_; ++a)
    for (std::size_t b = a; b < dim_; ++b) g(a, b) = g(b, a) = entry(a, b).eval(x);
  return g;
}

Metric::Jet Metric::jet(std::span<const double> x) const {
  if (x.size() != dim_) throw InvalidArgument("metric evaluated at a point of the wrong dimension");
  Jet j;
  j.dg.assign(dim_, Matrix::Zero(dim_, dim_));
  if (euclidean_) {
    j.g = Matrix::Identity(dim_, dim_);
    return j;
  }
  j.g.resize(dim_, dim_);
  const auto seeds = seed_dual(x);
  for (std::size_t a = 0; a < dim_; ++a) {
    for (std::size_t b = a; b < dim_; ++b) {
      const Dual1 v = entry(a, b).eval(std::span<const Dual1>(seeds));
      j.g(a, b) = j.g(b, a) = v.value;
      for (std::size_t c = 0; c < dim_; ++c) j.dg[c](a, b) = j.dg[c](b, a) = v.d[c];
    }
  }
  return j;
}

Matrix inverse_metric(const Matrix& g) {
  Eigen::LLT<Matrix> llt(g);
  if (llt.info() != Eigen::Success) throw SingularMetric("metric is not positive definite");
  const Matrix& L = llt.matrixLLT();
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    if (L(i, i) * L(i, i) < kMinMetricPivot) throw SingularMetric("Cholesky pivot below 1e-12");
  }
  Matrix inv = llt.solve(Matrix::Identity(g.rows(), g.cols()));
  return 0.5 * (inv + inv.transpose());
}

// ---------------------------------------------------------------------------

OneForm::OneForm(std::vector<ScalarField> components) : components_(std::move(components)) {
  for (const auto& c : components_)
    if (c.dimension() != components_.size()) throw InvalidArgument("one-form component count must equal dimension");
}

OneForm OneForm::zero(std::size_t dimension) {
  std::vector<ScalarField> c;
  for (std::size_t a = 0; a < dimension; ++a) c.push_back(ScalarField::constant(dimension, 0.0));
  return OneForm(std::move(c));
}

OneForm OneForm::parse(const std::vector<std::string>& components, std::size_t dimension) {
  if (components.size() != dimension) throw InvalidArgument("one-form component count must equal dimension");
  std::vector<ScalarField> c;
  for (const auto& s : components) c.push_back(ScalarField::parse(s, dimension));
  return OneForm(std::move(c));
}

namespace {

class PartialBody final : public FieldBody {
 public:
  PartialBody(ScalarField f, std::size_t index) : f_(std::move(f)), index_(index) {}

  double eval(std::span<const double> x) const override {
    std::vector<Dual1> s = seed_dual(x);
    return f_.eval(std::span<const Dual1>(s)).d[index_];
  }
  Dual1 eval(std::span<const Dual1> x) const override {
    std::vector<Dual2> s;
    s.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      Dual2 v(x[i], x.size());
      v.d[i] = Dual1(1.0);
      s.push_back(v);
    }
    return f_.eval(std::span<const Dual2>(s)).d[index_];
  }
  Dual2 eval(std::span<const Dual2>) const override {
    throw DomainError("third derivatives are not supported");
  }
  std::string describe() const override { return "d" + std::to_string(index_ + 1) + "(" + f_.describe() + ")"; }

 private:
  ScalarField f_;
  std::size_t index_;
};

}  // namespace

OneForm OneForm::differential(const ScalarField& f) {
  std::vector<ScalarField> c;
  for (std::size_t a = 0; a < f.dimension(); ++a)
    c.emplace_back(f.dimension(), std::make_shared<PartialBody>(f, a));
  return OneForm(std::move(c));
}

OneForm operator+(const OneForm& a, const OneForm& b) {
  if (a.dimension() != b.dimension()) throw InvalidArgument("adding one-forms of different dimension");
  std::vector<ScalarField> c;
  for (std::size_t i = 0; i < a.dimension(); ++i) {
    if (!a[i].expr() || !b[i].expr()) throw InvalidArgument("one-form sum needs expression-backed components");
    c.emplace_back(a.dimension(), *a[i].expr() + *b[i].expr());
  }
  return OneForm(std::move(c));
}

// ---------------------------------------------------------------------------

Vector Christoffel::contract(const Vector& v) const {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(n_));
  for (std::size_t a = 0; a < n_; ++a) {
    double s = 0.0;
    for (std::size_t m = 0; m < n_; ++m)
      for (std::size_t k = 0; k < n_; ++k) s += (*this)(a, m, k) * v[m] * v[k];
    out[a] = s;
  }
  return out;
}

Vector riemannian_gradient(const Metric& metric, const ScalarField& field, std::span<const double> x) {
  const auto partials = field.grad_partials(x);
  Vector d = Eigen::Map<const Vector>(partials.data(), static_cast<Eigen::Index>(partials.size()));
  if (metric.is_euclidean()) return d;
  return inverse_metric(metric.value(x)) * d;
}

Christoffel christoffel_from_jet(const Metric::Jet& jet, const Matrix& g_inv) {
  const std::size_t n = static_cast<std::size_t>(jet.g.rows());
  Christoffel gamma(n);
  // lowered[b](m, k) = (d_k g_bm + d_m g_bk - d_b g_mk) / 2
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t k = m; k < n; ++k) {
      Vector lowered(static_cast<Eigen::Index>(n));
      for (std::size_t b = 0; b < n; ++b)
        lowered[b] = 0.5 * (jet.dg[k](b, m) + jet.dg[m](b, k) - jet.dg[b](m, k));
      const Vector raised = g_inv * lowered;
      for (std::size_t a = 0; a < n; ++a) gamma(a, m, k) = gamma(a, k, m) = raised[a];
    }
  }
  return gamma;
}

Christoffel christoffel(const Metric& metric, std::span<const double> x) {
  if (metric.is_euclidean()) return Christoffel(metric.dimension());
  const Metric::Jet jet = metric.jet(x);
  return christoffel_from_jet(jet, inverse_metric(jet.g));
}

Matrix magnetic_tensor(const OneForm& form, std::span<const double> x) {
  const std::size_t n = form.dimension();
  if (x.size() != n) throw InvalidArgument("one-form evaluated at a point of the wrong dimension");
  Matrix dA(n, n);  // dA(a, b) = d_a A_b
  const auto seeds = seed_dual(x);
  for (std::size_t b = 0; b < n; ++b) {
    const Dual1 v = form[b].eval(std::span<const Dual1>(seeds));
    for (std::size_t a = 0; a < n; ++a) dA(a, b) = v.d[a];
  }
  Matrix F = Matrix::Zero(n, n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const double v = dA(a, b) - dA(b, a);
      F(a, b) = v;
      F(b, a) = -v;
    }
  }
  return F;
}

Vector contract_two_form(const Matrix& F, const Vector& v) { return F.transpose() * v; }

double contracted_form_norm(const Metric& metric, const OneForm& form, const Vector& v,
                            std::span<const double> x) {
  const Vector c = contract_two_form(magnetic_tensor(form, x), v);
  if (metric.is_euclidean()) return c.norm();
  const Matrix g_inv = inverse_metric(metric.value(x));
  return std::sqrt(std::max(0.0, c.dot(g_inv * c)));
}

double two_form_norm(const Matrix& F, const Matrix& g_inv) {
  const Matrix raised = g_inv * F * g_inv;
  return std::sqrt(std::max(0.0, 0.5 * (F.array() * raised.array()).sum()));
}

PointGeometry point_geometry(const Metric& metric, const OneForm* form, std::span<const double> x) {
  PointGeometry pg;
  pg.x = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
  const Metric::Jet jet = metric.jet(x);
  pg.g = jet.g;
  pg.g_inv = metric.is_euclidean() ? Matrix(jet.g) : inverse_metric(jet.g);
  pg.gamma = metric.is_euclidean() ? Christoffel(metric.dimension()) : christoffel_from_jet(jet, pg.g_inv);
  if (form) pg.magnetic = magnetic_tensor(*form, x);
  return pg;
}

// ---------------------------------------------------------------------------

std::size_t ChristoffelCache::KeyHash::operator()(const std::vector<std::int64_t>& k) const noexcept {
  std::size_t h = 1469598103934665603ull;
  for (auto v : k) {
    h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return h;
}

Christoffel ChristoffelCache::get(std::span<const double> x) {
  std::vector<std::int64_t> key;
  key.reserve(x.size());
  for (double v : x) {
    const double q = v / grid_;
    if (!(std::abs(q) < 9.0e18)) return christoffel(metric_, x);
    key.push_back(std::llround(q));
  }
  {
    std::shared_lock lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) {
      ++hits_;
      return it->second;
    }
  }
  Christoffel value = christoffel(metric_, x);
  std::unique_lock lock(mutex_);
  cache_.emplace(std::move(key), value);
  return value;
}

std::size_t ChristoffelCache::size() const {
  std::shared_lock lock(mutex_);
  return cache_.size();
}

}  // namespace lyap
