#include <doctest.h>

#include <cmath>
#include <sstream>

#include "polydyn/cli.hpp"
#include "polydyn/examples.hpp"

using namespace polydyn;
using namespace polydyn::cli;

namespace {

const std::string kSpecs = std::string(POLYDYN_DATA_DIR) + "/specs/";

struct Run {
  int code;
  std::string out, err;
};

Run run(RunConfig cfg) {
  std::ostringstream out, err;
  const int code = execute(cfg, out, err);
  return {code, out.str(), err.str()};
}

RunConfig config(const std::string& command, const std::string& spec = "") {
  RunConfig cfg;
  cfg.command = command;
  if (!spec.empty()) cfg.spec = kSpecs + spec + ".json";
  return cfg;
}

std::vector<std::vector<std::string>> csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t k = 0; k < header.size(); ++k)
    if (header[k] == name) return k;
  FAIL("no column " << name);
  return 0;
}

}  // namespace

TEST_CASE("run: counter rows cycle") {
  RunConfig cfg = config("run", "counter");
  cfg.horizon = 6;
  const Run r = run(cfg);
  REQUIRE(r.code == kPass);
  const auto rows = csv(r.out);
  REQUIRE(rows.size() == 8);
  CHECK(rows[0] == std::vector<std::string>{"t", "state"});
  for (int t = 0; t <= 6; ++t) {
    CHECK(rows[t + 1][0] == std::to_string(t));
    CHECK(rows[t + 1][1] == std::to_string(t % 6));
  }
}

TEST_CASE("run: exact Markov columns follow matrix powers") {
  RunConfig cfg = config("run", "markov");
  cfg.mode = "exact";
  cfg.horizon = 12;
  const Run r = run(cfg);
  REQUIRE(r.code == kPass);
  const auto rows = csv(r.out);
  REQUIRE(rows.size() == 14);
  const std::size_t p0 = column(rows[0], "p_0"), p1 = column(rows[0], "p_1");
  Eigen::Matrix2d k;
  k << 0.9, 0.1, 0.2, 0.8;
  Eigen::RowVector2d row(1.0, 0.0);
  for (int t = 0; t <= 12; ++t) {
    CHECK(std::abs(std::stod(rows[t + 1][p0]) - row(0)) <= 1e-12);
    CHECK(std::abs(std::stod(rows[t + 1][p1]) - row(1)) <= 1e-12);
    row = row * k;
  }
}

TEST_CASE("same seed gives byte-identical CSV") {
  for (const std::string spec : {"thermostat", "markov", "drift"}) {
    RunConfig cfg = config("run", spec);
    cfg.seed = 17;
    cfg.horizon = 40;
    const Run a = run(cfg), b = run(cfg);
    REQUIRE(a.code == kPass);
    CHECK(a.out == b.out);
  }
  RunConfig ou = config("demo");
  ou.demo = "ou";
  ou.seed = 3;
  CHECK(run(ou).out == run(ou).out);
  RunConfig other = ou;
  other.seed = 4;
  CHECK(run(ou).out != run(other).out);
}

TEST_CASE("check: exit codes follow the verdicts") {
  const auto code = [](const std::string& suite, const std::string& spec) {
    RunConfig cfg = config("check", spec);
    cfg.suite = suite;
    return run(cfg).code;
  };
  CHECK(code("flow", "counter") == kPass);
  CHECK(code("flow", "markov") == kPass);
  CHECK(code("flow", "clocked_counter") == kLawFailure);
  CHECK(code("measure", "cyclic_shift") == kPass);
  CHECK(code("measure", "biased_swap") == kLawFailure);
  CHECK(code("random", "skew_product") == kPass);
  CHECK(code("random", "broken_skew_product") == kLawFailure);
  CHECK(code("comonoid", "comonoid") == kPass);
  CHECK(code("bayes", "bayes_worked") == kPass);
  CHECK(code("bayes", "bayes_blind") == kPass);
  CHECK(code("bundle", "counter") == kUsageError);
  CHECK(code("nonsense", "") == kUsageError);

  RunConfig cfg = config("check", "bayes_perturbed");
  cfg.suite = "bayes";
  const Run r = run(cfg);
  CHECK(r.code == kLawFailure);
  const json report = json::parse(r.out);
  CHECK_FALSE(report.at("passed").get<bool>());
  bool has_witness = false;
  for (const auto& law : report.at("results"))
    if (!law.at("passed").get<bool>() && (law.contains("witness") || !law.value("witnesses", json::array()).empty()))
      has_witness = true;
  CHECK(has_witness);
}

TEST_CASE("laplace: 1-D descent") {
  RunConfig cfg = config("laplace", "laplace_1d");
  cfg.horizon = 1000;
  const Run r = run(cfg);
  REQUIRE(r.code == kPass);
  const auto rows = csv(r.out);
  REQUIRE(rows.size() == 1002);
  const std::size_t m = column(rows[0], "mean_0"), f = column(rows[0], "free_energy");
  CHECK(std::abs(std::stod(rows.back()[m]) - 0.4) <= 1e-6);
  for (std::size_t k = 2; k < rows.size(); ++k) {
    const double prev = std::stod(rows[k - 1][f]);
    // equal values at the minimum may differ in the last bit
    CHECK(std::stod(rows[k][f]) <= prev + 4e-16 * std::abs(prev));
  }

  RunConfig frozen = config("laplace", "laplace_frozen");
  frozen.horizon = 50;
  const auto fr = csv(run(frozen).out);
  for (std::size_t k = 1; k < fr.size(); ++k) CHECK(fr[k][m] == "0.7");
}

TEST_CASE("laplace: two-level columns") {
  RunConfig cfg = config("laplace", "laplace_two_level");
  cfg.horizon = 3;
  const auto rows = csv(run(cfg).out);
  REQUIRE(rows.size() == 1 + 4 * 2);
  CHECK(rows[1][1] == "0");
  CHECK(rows[2][1] == "1");
}

TEST_CASE("errors are JSON diagnostics with code 2") {
  const Run bad = run(config("laplace", "laplace_bad_dims"));
  CHECK(bad.code == kUsageError);
  CHECK(bad.out.empty());
  const json e = json::parse(bad.err);
  CHECK(e.at("error").at("kind").get<std::string>() == "parse");

  const Run missing = run(config("run", "no_such_spec"));
  CHECK(missing.code == kUsageError);
  CHECK(json::parse(missing.err).contains("error"));

  CHECK(run(config("run")).code == kUsageError);
  RunConfig demo = config("demo");
  demo.demo = "nonsense";
  CHECK(run(demo).code == kUsageError);
}

TEST_CASE("format_number round-trips") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, 0.0}) CHECK(std::stod(format_number(x)) == x);
  CHECK(format_number(3.0) == "3");
}
