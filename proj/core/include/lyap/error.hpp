#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace lyap {

/// Base class for every failure raised by the library. The CLI maps the
/// category to an exit code, so each subclass picks one.
class Error : public std::runtime_error {
 public:
  enum class Category { kValidation, kNumerical };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

struct SourcePosition {
  std::size_t offset = 0;
  std::size_t line = 1;
  std::size_t column = 1;
};

class SyntaxError : public Error {
 public:
  SyntaxError(SourcePosition pos, std::vector<std::string> expected,
              const std::string& found);

  const SourcePosition& position() const noexcept { return pos_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  SourcePosition pos_;
  std::vector<std::string> expected_;
};

class UnknownIdentifier : public Error {
 public:
  UnknownIdentifier(SourcePosition pos, const std::string& name);
  const SourcePosition& position() const noexcept { return pos_; }

 private:
  SourcePosition pos_;
};

class DimensionExceeded : public Error {
 public:
  DimensionExceeded(SourcePosition pos, std::size_t index, std::size_t dimension);
  const SourcePosition& position() const noexcept { return pos_; }

 private:
  SourcePosition pos_;
};

#define LYAP_DECLARE_ERROR(Name, Cat)                                 \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& what)                            \
        : Error(Category::Cat, std::string(#Name ": ") + what) {}     \
  };

LYAP_DECLARE_ERROR(DomainError, kNumerical)
LYAP_DECLARE_ERROR(NonFiniteResult, kNumerical)
LYAP_DECLARE_ERROR(SingularMetric, kNumerical)
LYAP_DECLARE_ERROR(StepSizeUnderflow, kNumerical)
LYAP_DECLARE_ERROR(EnergyDriftExceeded, kNumerical)
LYAP_DECLARE_ERROR(GradientTooSmall, kNumerical)
LYAP_DECLARE_ERROR(IdentityViolation, kNumerical)
LYAP_DECLARE_ERROR(SingularJacobian, kNumerical)
LYAP_DECLARE_ERROR(OrderDependence, kNumerical)
LYAP_DECLARE_ERROR(EmptyShell, kNumerical)
LYAP_DECLARE_ERROR(NoPositiveDrift, kNumerical)
LYAP_DECLARE_ERROR(InvalidArgument, kValidation)
LYAP_DECLARE_ERROR(ParseError, kValidation)

#undef LYAP_DECLARE_ERROR

/// Aggregates every problem found while validating an input so the user
/// sees all of them at once.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

}  // namespace lyap
