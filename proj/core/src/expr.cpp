#include "lyap/expr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <system_error>
#include <vector>

#include "lyap/error.hpp"

namespace lyap {

namespace {

constexpr int kMaxIntegerExponent = 1024;
constexpr int kMaxNesting = 200;

std::shared_ptr<Node> make_node(Op op) {
  auto n = std::make_shared<Node>();
  n->op = op;
  return n;
}

bool is_function(Op op) {
  return op == Op::kSin || op == Op::kCos || op == Op::kExp || op == Op::kLn ||
         op == Op::kSqrt;
}

const char* function_name(Op op) {
  switch (op) {
    case Op::kSin: return "sin";
    case Op::kCos: return "cos";
    case Op::kExp: return "exp";
    case Op::kLn: return "ln";
    case Op::kSqrt: return "sqrt";
    default: return "";
  }
}

const char* binary_symbol(Op op) {
  switch (op) {
    case Op::kAdd: return "+";
    case Op::kSub: return "-";
    case Op::kMul: return "*";
    case Op::kDiv: return "/";
    default: return "?";
  }
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

// Integer exponent carried by a parsed exponent subtree, if it is one.
bool integer_exponent(const Node& e, int& out) {
  double v = 0.0;
  if (e.op == Op::kNumber) {
    v = e.number;
  } else if (e.op == Op::kNeg && e.child[0]->op == Op::kNumber) {
    v = -e.child[0]->number;
  } else {
    return false;
  }
  if (v != std::floor(v) || std::abs(v) > kMaxIntegerExponent) return false;
  out = static_cast<int>(v);
  return true;
}

void print(const Node& n, std::string& out) {
  switch (n.op) {
    case Op::kNumber:
      out += format_number(n.number);
      return;
    case Op::kVariable:
      out += 'x';
      out += std::to_string(n.index + 1);
      return;
    case Op::kNeg:
      out += "(-";
      print(*n.child[0], out);
      out += ')';
      return;
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul:
    case Op::kDiv:
      out += '(';
      print(*n.child[0], out);
      out += binary_symbol(n.op);
      print(*n.child[1], out);
      out += ')';
      return;
    case Op::kIntPow:
      out += '(';
      print(*n.child[0], out);
      out += '^';
      out += std::to_string(n.exponent);
      out += ')';
      return;
    case Op::kPow:
      out += '(';
      print(*n.child[0], out);
      out += "^(";
      print(*n.child[1], out);
      out += "))";
      return;
    default:
      out += function_name(n.op);
      out += '(';
      print(*n.child[0], out);
      out += ')';
      return;
  }
}

bool equal(const Node& a, const Node& b) {
  if (&a == &b) return true;
  if (a.op != b.op) return false;
  switch (a.op) {
    case Op::kNumber: return a.number == b.number && std::signbit(a.number) == std::signbit(b.number);
    case Op::kVariable: return a.index == b.index;
    case Op::kIntPow: return a.exponent == b.exponent && equal(*a.child[0], *b.child[0]);
    default: break;
  }
  for (std::size_t i = 0; i < 2; ++i) {
    if (bool(a.child[i]) != bool(b.child[i])) return false;
    if (a.child[i] && !equal(*a.child[i], *b.child[i])) return false;
  }
  return true;
}

std::size_t arity_of(const Node& n) {
  if (n.op == Op::kVariable) return n.index + 1;
  std::size_t r = 0;
  for (const auto& c : n.child)
    if (c) r = std::max(r, arity_of(*c));
  return r;
}

// ---------------------------------------------------------------------------

enum class Tok { kNumber, kIdent, kPlus, kMinus, kStar, kSlash, kCaret, kLParen, kRParen, kEnd, kBad };

struct Token {
  Tok kind = Tok::kEnd;
  std::size_t begin = 0;
  std::size_t end = 0;
  double number = 0.0;
};

class Parser {
 public:
  Parser(std::string_view src, std::size_t dimension) : src_(src), dim_(dimension) { advance(); }

  Expr parse() {
    Expr e = parse_sum();
    if (tok_.kind != Tok::kEnd) fail({"operator", "end of input"});
    return e;
  }

 private:
  SourcePosition position(std::size_t offset) const {
    SourcePosition p;
    p.offset = offset;
    for (std::size_t i = 0; i < offset && i < src_.size(); ++i) {
      if (src_[i] == '\n') {
        ++p.line;
        p.column = 1;
      } else {
        ++p.column;
      }
    }
    return p;
  }

  std::string found() const {
    if (tok_.kind == Tok::kEnd) return "end of input";
    std::string text(src_.substr(tok_.begin, std::max<std::size_t>(1, tok_.end - tok_.begin)));
    for (char& c : text)
      if (static_cast<unsigned char>(c) < 0x20 || static_cast<unsigned char>(c) >= 0x7f) c = '?';
    return "'" + text + "'";
  }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    throw SyntaxError(position(tok_.begin), std::move(expected), found());
  }

  void advance() {
    std::size_t i = pos_;
    while (i < src_.size() && (src_[i] == ' ' || src_[i] == '\t' || src_[i] == '\n' || src_[i] == '\r'))
      ++i;
    tok_ = Token{};
    tok_.begin = i;
    if (i >= src_.size()) {
      tok_.kind = Tok::kEnd;
      tok_.end = pos_ = i;
      return;
    }
    const char c = src_[i];
    auto is_digit = [](char ch) { return ch >= '0' && ch <= '9'; };
    auto is_alpha = [](char ch) { return (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || ch == '_'; };
    if (is_digit(c) || (c == '.' && i + 1 < src_.size() && is_digit(src_[i + 1]))) {
      std::size_t j = i;
      while (j < src_.size() && is_digit(src_[j])) ++j;
      if (j < src_.size() && src_[j] == '.') {
        ++j;
        while (j < src_.size() && is_digit(src_[j])) ++j;
      }
      if (j < src_.size() && (src_[j] == 'e' || src_[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src_.size() && (src_[k] == '+' || src_[k] == '-')) ++k;
        if (k < src_.size() && is_digit(src_[k])) {
          while (k < src_.size() && is_digit(src_[k])) ++k;
          j = k;
        }
      }
      double v = 0.0;
      auto [p, ec] = std::from_chars(src_.data() + i, src_.data() + j, v);
      tok_.kind = (ec == std::errc() && p == src_.data() + j && std::isfinite(v)) ? Tok::kNumber : Tok::kBad;
      tok_.number = v;
      tok_.end = pos_ = j;
      return;
    }
    if (is_alpha(c)) {
      std::size_t j = i;
      while (j < src_.size() && (is_alpha(src_[j]) || is_digit(src_[j]))) ++j;
      tok_.kind = Tok::kIdent;
      tok_.end = pos_ = j;
      return;
    }
    switch (c) {
      case '+': tok_.kind = Tok::kPlus; break;
      case '-': tok_.kind = Tok::kMinus; break;
      case '*': tok_.kind = Tok::kStar; break;
      case '/': tok_.kind = Tok::kSlash; break;
      case '^': tok_.kind = Tok::kCaret; break;
      case '(': tok_.kind = Tok::kLParen; break;
      case ')': tok_.kind = Tok::kRParen; break;
      default: tok_.kind = Tok::kBad; break;
    }
    tok_.end = pos_ = i + 1;
  }

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : parser(p) {
      if (++parser.depth_ > kMaxNesting) parser.fail({"shallower nesting (limit 200)"});
    }
    ~DepthGuard() { --parser.depth_; }
    Parser& parser;
  };

  Expr parse_sum() {
    Expr lhs = parse_product();
    while (tok_.kind == Tok::kPlus || tok_.kind == Tok::kMinus) {
      const Op op = tok_.kind == Tok::kPlus ? Op::kAdd : Op::kSub;
      advance();
      lhs = Expr::binary(op, lhs, parse_product());
    }
    return lhs;
  }

  Expr parse_product() {
    Expr lhs = parse_unary();
    while (tok_.kind == Tok::kStar || tok_.kind == Tok::kSlash) {
      const Op op = tok_.kind == Tok::kStar ? Op::kMul : Op::kDiv;
      advance();
      lhs = Expr::binary(op, lhs, parse_unary());
    }
    return lhs;
  }

  Expr parse_unary() {
    DepthGuard guard(*this);
    if (tok_.kind == Tok::kMinus) {
      advance();
      auto n = make_node(Op::kNeg);
      n->child[0] = parse_unary().root_ptr();
      return Expr(n);
    }
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (tok_.kind != Tok::kCaret) return base;
    advance();
    Expr exponent = parse_unary();
    int k = 0;
    if (integer_exponent(exponent.root(), k)) return Expr::int_pow(base, k);
    auto n = make_node(Op::kPow);
    n->child[0] = base.root_ptr();
    n->child[1] = exponent.root_ptr();
    return Expr(n);
  }

  Expr parse_primary() {
    static const std::vector<std::string> kPrimary = {"number", "variable", "function", "'('", "'-'"};
    switch (tok_.kind) {
      case Tok::kNumber: {
        auto n = make_node(Op::kNumber);
        n->number = tok_.number;
        advance();
        return Expr(n);
      }
      case Tok::kLParen: {
        DepthGuard guard(*this);
        advance();
        Expr inner = parse_sum();
        if (tok_.kind != Tok::kRParen) fail({"')'"});
        advance();
        return inner;
      }
      case Tok::kIdent:
        return parse_identifier();
      default:
        fail(kPrimary);
    }
  }

  Expr parse_identifier() {
    const std::string_view name = src_.substr(tok_.begin, tok_.end - tok_.begin);
    const SourcePosition where = position(tok_.begin);
    static constexpr std::array<std::pair<std::string_view, Op>, 5> kFunctions = {{
        {"sin", Op::kSin}, {"cos", Op::kCos}, {"exp", Op::kExp}, {"ln", Op::kLn}, {"sqrt", Op::kSqrt}}};
    for (const auto& [fname, op] : kFunctions) {
      if (name != fname) continue;
      advance();
      if (tok_.kind != Tok::kLParen) fail({"'('"});
      DepthGuard guard(*this);
      advance();
      Expr arg = parse_sum();
      if (tok_.kind != Tok::kRParen) fail({"')'"});
      advance();
      return Expr::unary(op, arg);
    }
    if (name.size() >= 2 && name[0] == 'x' && name[1] >= '1' && name[1] <= '9' &&
        std::all_of(name.begin() + 1, name.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      std::size_t index = 0;
      auto [p, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), index);
      if (ec != std::errc() || index > dim_) {
        throw DimensionExceeded(where, ec == std::errc() ? index : std::numeric_limits<std::size_t>::max(), dim_);
      }
      advance();
      return Expr::variable(index - 1);
    }
    throw UnknownIdentifier(where, std::string(name));
  }

  std::string_view src_;
  std::size_t dim_;
  std::size_t pos_ = 0;
  int depth_ = 0;
  Token tok_;
};

}  // namespace

// ---------------------------------------------------------------------------

Expr Expr::constant(double value) {
  if (!std::isfinite(value)) throw InvalidArgument("expression constants must be finite");
  auto n = make_node(Op::kNumber);
  n->number = std::abs(value);
  if (!std::signbit(value)) return Expr(n);
  auto neg = make_node(Op::kNeg);
  neg->child[0] = n;
  return Expr(neg);
}

Expr Expr::variable(std::size_t index) {
  auto n = make_node(Op::kVariable);
  n->index = index;
  return Expr(n);
}

Expr Expr::unary(Op op, const Expr& arg) {
  if (op != Op::kNeg && !is_function(op)) throw InvalidArgument("not a unary operator");
  auto n = make_node(op);
  n->child[0] = arg.root_;
  return Expr(n);
}

Expr Expr::binary(Op op, const Expr& lhs, const Expr& rhs) {
  if (op == Op::kPow) {
    int k = 0;
    if (integer_exponent(rhs.root(), k)) return int_pow(lhs, k);
  } else if (op != Op::kAdd && op != Op::kSub && op != Op::kMul && op != Op::kDiv) {
    throw InvalidArgument("not a binary operator");
  }
  auto n = make_node(op);
  n->child[0] = lhs.root_;
  n->child[1] = rhs.root_;
  return Expr(n);
}

Expr Expr::int_pow(const Expr& base, int exponent) {
  auto n = make_node(Op::kIntPow);
  n->exponent = exponent;
  n->child[0] = base.root_;
  return Expr(n);
}

std::size_t Expr::arity() const { return root_ ? arity_of(*root_) : 0; }

std::string Expr::to_string() const {
  std::string out;
  if (root_) print(*root_, out);
  return out;
}

bool operator==(const Expr& a, const Expr& b) {
  if (!a.root_ || !b.root_) return a.root_ == b.root_;
  return equal(*a.root_, *b.root_);
}

Expr operator+(const Expr& a, const Expr& b) { return Expr::binary(Op::kAdd, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::binary(Op::kSub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::binary(Op::kMul, a, b); }

Expr parse_expr(std::string_view source, std::size_t dimension) {
  return Parser(source, dimension).parse();
}

}  // namespace lyap
