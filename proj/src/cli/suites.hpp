#pragma once

#include <optional>
#include <string>

#include "polydyn/cli.hpp"

namespace polydyn::cli {

struct SuiteInput {
  std::optional<json> spec;
  std::optional<Tick> horizon;
  std::optional<double> tol;
  std::uint64_t seed = 0;
};

// {"suite", "passed", "results": [...]} with one entry per checked law.
json run_suite(const std::string& suite, const SuiteInput& in);

}  // namespace polydyn::cli
