#include <CLI11.hpp>
#include <iostream>

#include "polydyn/cli.hpp"

using polydyn::cli::RunConfig;

int main(int argc, char** argv) {
  CLI::App app{"Compositional open dynamical systems: simulate, check laws, run Laplace stacks."};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string spec, out;
  long long horizon = -1;
  double tol = -1.0;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "64-bit seed");
    sub->add_option("--horizon", horizon, "number of ticks")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", out, "write the result here instead of stdout");
    sub->add_option("--tol", tol, "tolerance override")->check(CLI::NonNegativeNumber);
  };

  auto* run = app.add_subcommand("run", "trajectory of a system spec as CSV");
  run->add_option("--spec", spec, "system spec (JSON)")->required();
  run->add_option("--mode", cfg.mode, "sample (one seeded path) or exact (state laws)")
      ->check(CLI::IsMember({"sample", "exact"}));
  common(run);

  auto* check = app.add_subcommand("check", "run a law suite and report as JSON");
  check->add_option("--spec", spec, "spec for the suite (JSON)");
  check->add_option("--suite", cfg.suite, "flow, measure, random, bundle, comonoid, bayes or all")
      ->check(CLI::IsMember(polydyn::cli::suite_names()));
  common(check);

  auto* laplace = app.add_subcommand("laplace", "Laplace descent of a Gaussian model stack as CSV");
  laplace->add_option("--spec", spec, "model spec (JSON)")->required();
  common(laplace);

  auto* demo = app.add_subcommand("demo", "bundled examples");
  demo->add_option("name", cfg.demo, "counter, markov, decay, ou, laplace or bayes")
      ->check(CLI::IsMember(polydyn::cli::demo_names()));
  common(demo);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const polydyn::cli::json diag = {{"error", {{"kind", "usage"}, {"message", e.what()}}}};
    std::cerr << diag.dump() << "\n";
    return polydyn::cli::kUsageError;
  }

  cfg.command = app.get_subcommands().front()->get_name();
  if (!spec.empty()) cfg.spec = spec;
  if (!out.empty()) cfg.out = out;
  if (horizon >= 0) cfg.horizon = static_cast<polydyn::Tick>(horizon);
  if (tol >= 0.0) cfg.tol = tol;
  return polydyn::cli::execute(cfg, std::cout, std::cerr);
}
