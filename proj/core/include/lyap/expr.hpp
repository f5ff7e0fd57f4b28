#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <string>
#include <string_view>

namespace lyap {

enum class Op {
  kNumber,
  kVariable,
  kNeg,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kIntPow,  // base ^ integer literal, evaluated by repeated multiplication
  kPow,     // base ^ real expression, evaluated as exp(exponent * ln(base))
  kSin,
  kCos,
  kExp,
  kLn,
  kSqrt,
};

struct Node {
  Op op = Op::kNumber;
  double number = 0.0;     // kNumber
  std::size_t index = 0;   // kVariable, zero-based
  int exponent = 0;        // kIntPow
  std::array<std::shared_ptr<const Node>, 2> child{};
};

/// Immutable expression tree over coordinates x1..xn.
class Expr {
 public:
  Expr() = default;
  explicit Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}

  static Expr constant(double value);
  /// Coordinate `index` (zero-based; prints as x{index+1}).
  static Expr variable(std::size_t index);
  static Expr unary(Op op, const Expr& arg);
  static Expr binary(Op op, const Expr& lhs, const Expr& rhs);
  static Expr int_pow(const Expr& base, int exponent);

  const Node& root() const { return *root_; }
  const std::shared_ptr<const Node>& root_ptr() const { return root_; }
  bool empty() const { return root_ == nullptr; }

  /// Largest zero-based variable index plus one; 0 for closed expressions.
  std::size_t arity() const;

  /// Fully parenthesized text that parses back to the same tree.
  std::string to_string() const;

  friend bool operator==(const Expr& a, const Expr& b);

 private:
  std::shared_ptr<const Node> root_;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);

/// Parses `source` over `dimension` coordinates x1..x{dimension}.
/// Throws SyntaxError, UnknownIdentifier or DimensionExceeded.
Expr parse_expr(std::string_view source, std::size_t dimension);

}  // namespace lyap
