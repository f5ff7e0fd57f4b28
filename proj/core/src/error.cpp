#include "lyap/error.hpp"

#include <sstream>

namespace lyap {

namespace {

std::string describe_position(const SourcePosition& pos) {
  std::ostringstream os;
  os << "line " << pos.line << ", column " << pos.column;
  return os.str();
}

std::string syntax_message(const SourcePosition& pos,
                           const std::vector<std::string>& expected,
                           const std::string& found) {
  std::ostringstream os;
  os << "SyntaxError: " << describe_position(pos) << ": expected ";
  if (expected.size() > 1) os << "one of ";
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i) os << ", ";
    os << expected[i];
  }
  os << ", found " << found;
  return os.str();
}

std::string join_problems(const std::vector<std::string>& problems) {
  std::ostringstream os;
  os << "ValidationError: " << problems.size() << " problem(s)";
  for (const auto& p : problems) os << "\n  - " << p;
  return os.str();
}

}  // namespace

SyntaxError::SyntaxError(SourcePosition pos, std::vector<std::string> expected,
                         const std::string& found)
    : Error(Category::kValidation, syntax_message(pos, expected, found)),
      pos_(pos),
      expected_(std::move(expected)) {}

UnknownIdentifier::UnknownIdentifier(SourcePosition pos, const std::string& name)
    : Error(Category::kValidation,
            "UnknownIdentifier: " + describe_position(pos) + ": '" + name + "'"),
      pos_(pos) {}

DimensionExceeded::DimensionExceeded(SourcePosition pos, std::size_t index,
                                     std::size_t dimension)
    : Error(Category::kValidation,
            "DimensionExceeded: " + describe_position(pos) + ": variable x" +
                std::to_string(index) + " exceeds dimension " + std::to_string(dimension)),
      pos_(pos) {}

ValidationError::ValidationError(std::vector<std::string> problems)
    : Error(Category::kValidation, join_problems(problems)), problems_(std::move(problems)) {}

}  // namespace lyap
