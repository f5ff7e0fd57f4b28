#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "lyap/problem.hpp"

namespace lyap {

struct CorpusSource {
  std::string_view name;
  std::string_view json;
};

/// Built-in problems, in a fixed order.
const std::vector<CorpusSource>& corpus_sources();

/// Every built-in problem, parsed and validated.
std::vector<ProblemDefinition> corpus();

/// Throws InvalidArgument for an unknown name.
ProblemDefinition corpus_problem(std::string_view name);
std::string_view corpus_json(std::string_view name);

}  // namespace lyap
