#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lyap/dual.hpp"
#include "lyap/expr.hpp"

namespace lyap {

/// Evaluation backend of a scalar field. Implementations must be pure and
/// raise DomainError instead of producing non-finite values where the
/// underlying formula is undefined.
class FieldBody {
 public:
  virtual ~FieldBody() = default;
  virtual double eval(std::span<const double> x) const = 0;
  virtual Dual1 eval(std::span<const Dual1> x) const = 0;
  virtual Dual2 eval(std::span<const Dual2> x) const = 0;
  virtual std::string describe() const = 0;
};

/// Evaluates an expression tree over any supported scalar type.
template <class T>
T evaluate(const Node& node, std::span<const T> x);

extern template double evaluate<double>(const Node&, std::span<const double>);
extern template Dual1 evaluate<Dual1>(const Node&, std::span<const Dual1>);
extern template Dual2 evaluate<Dual2>(const Node&, std::span<const Dual2>);

/// A differentiable map R^n -> R. Immutable and cheap to copy.
class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(std::size_t dimension, Expr body);
  ScalarField(std::size_t dimension, std::shared_ptr<const FieldBody> body);

  static ScalarField parse(std::string_view source, std::size_t dimension);
  static ScalarField constant(std::size_t dimension, double value);
  static ScalarField coordinate(std::size_t dimension, std::size_t index);

  std::size_t dimension() const { return dim_; }
  bool valid() const { return body_ != nullptr; }

  /// The expression when the field is expression-backed, else nullptr.
  const Expr* expr() const { return expr_ ? &*expr_ : nullptr; }
  std::string describe() const;

  /// Throws DomainError or NonFiniteResult.
  double eval(std::span<const double> x) const;

  /// Coordinate partials (d_1 f, ..., d_n f); not the Riemannian gradient.
  std::vector<double> grad_partials(std::span<const double> x) const;
  /// Value plus coordinate partials in one dual pass.
  double value_and_partials(std::span<const double> x, std::span<double> partials) const;
  /// Row-major n x n second partials from dual-over-dual evaluation.
  std::vector<double> hessian(std::span<const double> x) const;

  Dual1 eval(std::span<const Dual1> x) const;
  Dual2 eval(std::span<const Dual2> x) const;

 private:
  void check_point(std::size_t size) const;

  std::size_t dim_ = 0;
  std::shared_ptr<const FieldBody> body_;
  std::shared_ptr<const Expr> expr_;
};

/// Seeds x as n independent dual variables.
std::vector<Dual1> seed_dual(std::span<const double> x);
/// Seeds x for second derivatives.
std::vector<Dual2> seed_dual2(std::span<const double> x);

}  // namespace lyap
