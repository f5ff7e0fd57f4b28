#include "lyap/field.hpp"

#include <cmath>
#include <utility>

#include "lyap/error.hpp"

namespace lyap {

namespace {

template <class T>
T int_power(const T& base, int exponent) {
  if (exponent < 0) {
    if (primal(base) == 0.0) throw DomainError("negative integer power of zero");
    return T(1.0) / int_power(base, -exponent);
  }
  T result(1.0);
  T b = base;
  bool first = true;
  for (unsigned k = static_cast<unsigned>(exponent); k; k >>= 1) {
    if (k & 1u) {
      result = first ? b : result * b;
      first = false;
    }
    if (k > 1) b = b * b;
  }
  return result;
}

class ExprBody final : public FieldBody {
 public:
  explicit ExprBody(Expr e) : expr_(std::move(e)) {}
  double eval(std::span<const double> x) const override { return evaluate(expr_.root(), x); }
  Dual1 eval(std::span<const Dual1> x) const override { return evaluate(expr_.root(), x); }
  Dual2 eval(std::span<const Dual2> x) const override { return evaluate(expr_.root(), x); }
  std::string describe() const override { return expr_.to_string(); }

 private:
  Expr expr_;
};

}  // namespace

template <class T>
T evaluate(const Node& node, std::span<const T> x) {
  using std::cos;
  using std::exp;
  using std::log;
  using std::sin;
  using std::sqrt;
  switch (node.op) {
    case Op::kNumber:
      return T(node.number);
    case Op::kVariable:
      return x[node.index];
    case Op::kNeg:
      return -evaluate(*node.child[0], x);
    case Op::kAdd:
      return evaluate(*node.child[0], x) + evaluate(*node.child[1], x);
    case Op::kSub:
      return evaluate(*node.child[0], x) - evaluate(*node.child[1], x);
    case Op::kMul:
      return evaluate(*node.child[0], x) * evaluate(*node.child[1], x);
    case Op::kDiv: {
      const T den = evaluate(*node.child[1], x);
      if (primal(den) == 0.0) throw DomainError("division by zero");
      return evaluate(*node.child[0], x) / den;
    }
    case Op::kIntPow:
      return int_power(evaluate(*node.child[0], x), node.exponent);
    case Op::kPow: {
      const T base = evaluate(*node.child[0], x);
      if (primal(base) <= 0.0) throw DomainError("real power of a non-positive base");
      return exp(evaluate(*node.child[1], x) * log(base));
    }
    case Op::kSin:
      return sin(evaluate(*node.child[0], x));
    case Op::kCos:
      return cos(evaluate(*node.child[0], x));
    case Op::kExp:
      return exp(evaluate(*node.child[0], x));
    case Op::kLn: {
      const T a = evaluate(*node.child[0], x);
      if (primal(a) <= 0.0) throw DomainError("ln of a non-positive value");
      return log(a);
    }
    case Op::kSqrt: {
      const T a = evaluate(*node.child[0], x);
      if (primal(a) < 0.0) throw DomainError("sqrt of a negative value");
      return sqrt(a);
    }
  }
  throw DomainError("unknown node");
}

template double evaluate<double>(const Node&, std::span<const double>);
template Dual1 evaluate<Dual1>(const Node&, std::span<const Dual1>);
template Dual2 evaluate<Dual2>(const Node&, std::span<const Dual2>);

// ---------------------------------------------------------------------------

ScalarField::ScalarField(std::size_t dimension, Expr body)
    : dim_(dimension),
      body_(std::make_shared<ExprBody>(body)),
      expr_(std::make_shared<const Expr>(std::move(body))) {
  if (dimension == 0 || dimension > kMaxDim)
    throw InvalidArgument("field dimension must be in 1.." + std::to_string(kMaxDim));
  if (expr_->arity() > dimension) throw InvalidArgument("expression uses more coordinates than the field dimension");
}

ScalarField::ScalarField(std::size_t dimension, std::shared_ptr<const FieldBody> body)
    : dim_(dimension), body_(std::move(body)) {
  if (dimension == 0 || dimension > kMaxDim)
    throw InvalidArgument("field dimension must be in 1.." + std::to_string(kMaxDim));
}

ScalarField ScalarField::parse(std::string_view source, std::size_t dimension) {
  return ScalarField(dimension, parse_expr(source, dimension));
}

ScalarField ScalarField::constant(std::size_t dimension, double value) {
  return ScalarField(dimension, Expr::constant(value));
}

ScalarField ScalarField::coordinate(std::size_t dimension, std::size_t index) {
  return ScalarField(dimension, Expr::variable(index));
}

std::string ScalarField::describe() const { return body_ ? body_->describe() : "<empty>"; }

void ScalarField::check_point(std::size_t size) const {
  if (!body_) throw InvalidArgument("evaluating an empty field");
  if (size != dim_)
    throw InvalidArgument("point has " + std::to_string(size) + " coordinates, field expects " +
                          std::to_string(dim_));
}

double ScalarField::eval(std::span<const double> x) const {
  check_point(x.size());
  const double v = body_->eval(x);
  if (!std::isfinite(v)) throw NonFiniteResult(describe());
  return v;
}

Dual1 ScalarField::eval(std::span<const Dual1> x) const {
  check_point(x.size());
  Dual1 v = body_->eval(x);
  if (!all_finite(v)) throw NonFiniteResult(describe());
  return v;
}

Dual2 ScalarField::eval(std::span<const Dual2> x) const {
  check_point(x.size());
  Dual2 v = body_->eval(x);
  if (!all_finite(v)) throw NonFiniteResult(describe());
  return v;
}

double ScalarField::value_and_partials(std::span<const double> x, std::span<double> partials) const {
  const auto seeds = seed_dual(x);
  const Dual1 r = eval(std::span<const Dual1>(seeds));
  for (std::size_t i = 0; i < dim_; ++i) partials[i] = r.d[i];
  return r.value;
}

std::vector<double> ScalarField::grad_partials(std::span<const double> x) const {
  std::vector<double> g(dim_);
  value_and_partials(x, g);
  return g;
}

std::vector<double> ScalarField::hessian(std::span<const double> x) const {
  const auto seeds = seed_dual2(x);
  const Dual2 r = eval(std::span<const Dual2>(seeds));
  std::vector<double> h(dim_ * dim_);
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j) h[i * dim_ + j] = r.d[i].d[j];
  return h;
}

std::vector<Dual1> seed_dual(std::span<const double> x) {
  std::vector<Dual1> s;
  s.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) s.push_back(Dual1::variable(x[i], i, x.size()));
  return s;
}

std::vector<Dual2> seed_dual2(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<Dual2> s;
  s.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Dual2 v(Dual1::variable(x[i], i, n), n);
    v.d[i] = Dual1(1.0);
    s.push_back(v);
  }
  return s;
}

}  // namespace lyap
