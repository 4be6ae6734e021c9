#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "polydyn/json_io.hpp"

namespace polydyn::cli {

using json_io::json;

// Unknown commands, suites or missing arguments.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Parsed command line.
struct RunConfig {
  std::string command;  // run | check | laplace | demo
  std::optional<std::string> spec;
  std::uint64_t seed = 0;
  std::optional<Tick> horizon;
  std::optional<std::string> out;
  std::optional<double> tol;
  std::string suite = "all";
  std::string mode = "sample";  // run: sample | exact
  std::string demo = "counter";
};

// Process exit codes.
inline constexpr int kPass = 0;
inline constexpr int kLawFailure = 1;
inline constexpr int kUsageError = 2;

struct Output {
  int code = kPass;
  std::string text;  // CSV or JSON
};

// Trajectory of a system spec: "sample" draws one seeded path with columns t,
// state and position components; "exact" gives the state law per tick.
Output cmd_run(const RunConfig& cfg);
// Law suite report as JSON; exit code 1 when any law fails.
Output cmd_check(const RunConfig& cfg);
// Per-step level means and Laplace free energies of a Gaussian model stack.
Output cmd_laplace(const RunConfig& cfg);
// Bundled examples: counter, markov, decay, ou, laplace, bayes.
Output cmd_demo(const RunConfig& cfg);

const std::vector<std::string>& suite_names();
const std::vector<std::string>& demo_names();

// Runs cfg.command and writes the result to cfg.out or `out`. Errors become a
// JSON diagnostic on `err` and exit code 2.
int execute(const RunConfig& cfg, std::ostream& out, std::ostream& err);

// Shortest round-trip text for a double; fixed across runs on one platform.
std::string format_number(double x);

}  // namespace polydyn::cli
