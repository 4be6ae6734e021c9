#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

#include "polydyn/cli.hpp"
#include "polydyn/error.hpp"
#include "polydyn/examples.hpp"
#include "suites.hpp"

namespace polydyn::cli {

namespace {

using json_io::ParseError;

std::size_t leaf_count(const Space& s) {
  switch (s.kind()) {
    case Space::Kind::Unit:
      return 0;
    case Space::Kind::Finite:
      return 1;
    case Space::Kind::Euclid:
      return s.dim();
    case Space::Kind::Prod: {
      std::size_t n = 0;
      for (const auto& f : s.factors()) n += leaf_count(f);
      return n;
    }
  }
  return 0;
}

std::vector<std::string> column_names(const std::string& prefix, const Space& s) {
  const std::size_t n = leaf_count(s);
  if (n == 1) return {prefix};
  std::vector<std::string> out;
  for (std::size_t k = 0; k < n; ++k) out.push_back(prefix + "_" + std::to_string(k));
  return out;
}

void flatten(const Point& p, std::vector<std::string>& cells) {
  if (p.is_unit()) return;
  if (p.is_label()) {
    cells.push_back(p.as_label());
  } else if (p.is_vec()) {
    for (double x : p.as_vec()) cells.push_back(format_number(x));
  } else {
    for (const auto& q : p.as_tuple()) flatten(q, cells);
  }
}

void write_row(std::ostringstream& os, const std::vector<std::string>& cells) {
  for (std::size_t k = 0; k < cells.size(); ++k) os << (k ? "," : "") << cells[k];
  os << "\n";
}

Section default_section(const json_io::SystemSpec& spec) {
  if (spec.section) return *spec.section;
  const auto n = section_count(spec.system.interface);
  if (n && *n == 1) return all_sections(spec.system.interface).front();
  throw ParseError("the interface " + spec.system.interface.str() + " has several sections; give \"section\"");
}

Point default_init(const json_io::SystemSpec& spec) {
  if (spec.init) return *spec.init;
  if (spec.system.states.is_finite()) return spec.system.states.enumerate().front();
  throw ParseError("systems on infinite state spaces need an \"init\" state");
}

std::string trajectory_csv(const System& sys, const Section& sigma, const Point& x0, Tick horizon,
                           std::uint64_t seed) {
  Rng rng(seed);
  const auto path = simulate(sys, sigma, x0, horizon, rng);
  std::ostringstream os;
  std::vector<std::string> header{"t"};
  for (auto& c : column_names("state", sys.states)) header.push_back(c);
  const std::size_t state_cols = header.size() - 1;
  std::size_t pos_cols = 0;
  if (auto n = leaf_count(sys.interface.positions()); n > 0) {
    for (auto& c : column_names("position", sys.interface.positions())) header.push_back(c);
    pos_cols = n;
  }
  write_row(os, header);
  for (Tick t = 0; t <= horizon; ++t) {
    std::vector<std::string> cells{format_number(sys.time.real_time(t))};
    flatten(path[t], cells);
    if (cells.size() != 1 + state_cols) throw ShapeError("state " + path[t].str() + " has the wrong shape");
    if (pos_cols) flatten(sys.output(t, path[t]), cells);
    write_row(os, cells);
  }
  return os.str();
}

std::string exact_csv(const System& sys, const Section& sigma, const Point& x0, Tick horizon) {
  if (!sys.states.is_finite()) throw UsageError("exact mode needs a finite state space");
  const auto states = sys.states.enumerate();
  const auto laws = state_laws(sys, sigma, Dist::dirac(x0), horizon);
  std::ostringstream os;
  std::vector<std::string> header{"t"};
  for (const auto& s : states) header.push_back("p_" + s.str());
  write_row(os, header);
  for (Tick t = 0; t <= horizon; ++t) {
    std::vector<std::string> cells{format_number(sys.time.real_time(t))};
    for (const auto& s : states) cells.push_back(format_number(laws[t].prob(s)));
    write_row(os, cells);
  }
  return os.str();
}

std::string laplace_csv(const json_io::LaplaceSpec& spec, Tick horizon) {
  const HierSystem st = stack(spec.levels, spec.config);
  const auto layout = stack_layout(spec.levels);
  const System sys = with_prior(skeleton(st), spec.prior);
  const std::size_t dim = sys.states.dim();
  const Eigen::VectorXd init = spec.init.value_or(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim)));
  if (static_cast<std::size_t>(init.size()) != dim)
    throw ParseError("init has " + std::to_string(init.size()) + " entries, the stack state has " +
                     std::to_string(dim));
  const Section datum = Section::constant(sys.interface, Point::vec(to_vec(spec.data)));
  const auto laws = state_laws(sys, datum, Dist::dirac(Point::vec(to_vec(init))), horizon);

  std::size_t width = 0;
  for (const auto& g : spec.levels) width = std::max(width, g.in_dim);
  std::ostringstream os;
  std::vector<std::string> header{"step", "level"};
  for (std::size_t k = 0; k < width; ++k) header.push_back("mean_" + std::to_string(k));
  header.push_back("free_energy");
  write_row(os, header);

  const auto block = [](const Eigen::VectorXd& s, std::size_t off, std::size_t n) {
    return Eigen::VectorXd(s.segment(static_cast<Eigen::Index>(off), static_cast<Eigen::Index>(n)));
  };
  for (Tick t = 0; t <= horizon; ++t) {
    const Eigen::VectorXd s = to_eigen(laws[t].point().as_vec());
    for (std::size_t k = 0; k < spec.levels.size(); ++k) {
      const auto& g = spec.levels[k];
      const Eigen::VectorXd x = block(s, layout[k].x_offset, layout[k].x_dim);
      GaussianState pi = spec.prior;
      if (k > 0) {
        const auto& above = spec.levels[k - 1];
        pi = {block(s, layout[k - 1].y_offset, layout[k - 1].y_dim), *above.fixed_cov};
      }
      const Eigen::VectorXd y =
          k + 1 == spec.levels.size() ? spec.data : block(s, layout[k + 1].x_offset, layout[k + 1].x_dim);
      const double f = free_energy_laplace(pi, g, {x, sigma_star(pi, g, x, y)}, y);
      std::vector<std::string> cells{std::to_string(t), std::to_string(k)};
      for (std::size_t c = 0; c < width; ++c) cells.push_back(c < g.in_dim ? format_number(x(c)) : "");
      cells.push_back(format_number(f));
      write_row(os, cells);
    }
  }
  return os.str();
}

json require_spec(const RunConfig& cfg) {
  if (!cfg.spec) throw UsageError("the " + cfg.command + " command needs --spec");
  return json_io::read_file(*cfg.spec);
}

json error_json(const std::string& kind, const std::string& message) {
  return {{"error", {{"kind", kind}, {"message", message}}}};
}

}  // namespace

std::string format_number(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

const std::vector<std::string>& demo_names() {
  static const std::vector<std::string> names{"counter", "markov", "decay", "ou", "laplace", "bayes"};
  return names;
}

Output cmd_run(const RunConfig& cfg) {
  const auto spec = json_io::system_from_json(require_spec(cfg));
  const Tick horizon = cfg.horizon.value_or(10);
  const Section sigma = default_section(spec);
  const Point x0 = default_init(spec);
  if (cfg.mode == "exact") return {kPass, exact_csv(spec.system, sigma, x0, horizon)};
  if (cfg.mode != "sample") throw UsageError("unknown mode \"" + cfg.mode + "\"");
  return {kPass, trajectory_csv(spec.system, sigma, x0, horizon, cfg.seed)};
}

Output cmd_check(const RunConfig& cfg) {
  SuiteInput in;
  if (cfg.spec) in.spec = json_io::read_file(*cfg.spec);
  in.horizon = cfg.horizon;
  in.tol = cfg.tol;
  in.seed = cfg.seed;
  const json report = run_suite(cfg.suite, in);
  return {report.at("passed").get<bool>() ? kPass : kLawFailure, report.dump(2) + "\n"};
}

Output cmd_laplace(const RunConfig& cfg) {
  const auto spec = json_io::laplace_from_json(require_spec(cfg));
  return {kPass, laplace_csv(spec, cfg.horizon.value_or(200))};
}

Output cmd_demo(const RunConfig& cfg) {
  const std::string& name = cfg.demo;
  if (name == "counter") {
    const System c = examples::counter(6);
    return {kPass, trajectory_csv(c, all_sections(c.interface).front(), Point::label("0"),
                                  cfg.horizon.value_or(12), cfg.seed)};
  }
  if (name == "markov") {
    const System m = examples::markov_cell(examples::cell_matrix());
    return {kPass, exact_csv(m, all_sections(m.interface).front(), Point::label("0"), cfg.horizon.value_or(10))};
  }
  if (name == "decay") {
    const System d = examples::decay(1e-3);
    return {kPass, trajectory_csv(d, all_sections(d.interface).front(), Point::vec({1.0}),
                                  cfg.horizon.value_or(1000), cfg.seed)};
  }
  if (name == "ou") {
    const double h = 0.01;
    const auto path = ou_path(1.0, 0.5, h, cfg.horizon.value_or(1000), cfg.seed, 1.0);
    std::ostringstream os;
    os << "step,t,x\n";
    for (std::size_t k = 0; k < path.size(); ++k)
      os << k << "," << format_number(double(k) * h) << "," << format_number(path[k]) << "\n";
    return {kPass, os.str()};
  }
  if (name == "laplace") {
    json_io::LaplaceSpec spec;
    spec.levels = {examples::scalar_model()};
    spec.prior = examples::scalar_prior();
    spec.data = Eigen::VectorXd::Ones(1);
    return {kPass, laplace_csv(spec, cfg.horizon.value_or(200))};
  }
  if (name == "bayes") {
    SuiteInput in;
    in.spec = json{{"x", {{"kind", "range"}, {"n", 2}}},
                   {"y", {{"kind", "range"}, {"n", 2}}},
                   {"channel", {{0.8, 0.2}, {0.3, 0.7}}},
                   {"prior", {{"categorical", {{"0", 0.6}, {"1", 0.4}}}}}};
    in.horizon = cfg.horizon;
    in.tol = cfg.tol;
    const json report = run_suite("bayes", in);
    return {report.at("passed").get<bool>() ? kPass : kLawFailure, report.dump(2) + "\n"};
  }
  throw UsageError("unknown demo \"" + name + "\"");
}

int execute(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  Output result;
  try {
    if (cfg.command == "run") {
      result = cmd_run(cfg);
    } else if (cfg.command == "check") {
      result = cmd_check(cfg);
    } else if (cfg.command == "laplace") {
      result = cmd_laplace(cfg);
    } else if (cfg.command == "demo") {
      result = cmd_demo(cfg);
    } else {
      throw UsageError("unknown command \"" + cfg.command + "\"");
    }
  } catch (const UsageError& e) {
    err << error_json("usage", e.what()).dump() << "\n";
    return kUsageError;
  } catch (const ParseError& e) {
    err << error_json("parse", e.what()).dump() << "\n";
    return kUsageError;
  } catch (const json::exception& e) {
    err << error_json("parse", e.what()).dump() << "\n";
    return kUsageError;
  } catch (const ShapeError& e) {
    err << error_json("shape", e.what()).dump() << "\n";
    return kUsageError;
  } catch (const SingularError& e) {
    err << error_json("singular", e.what()).dump() << "\n";
    return kUsageError;
  } catch (const UnsupportedError& e) {
    err << error_json("unsupported", e.what()).dump() << "\n";
    return kUsageError;
  } catch (const LawViolation& e) {
    err << error_json("law", e.what()).dump() << "\n";
    return kLawFailure;
  }
  if (cfg.out) {
    std::ofstream f(*cfg.out, std::ios::binary);
    if (!f) {
      err << error_json("io", "cannot write " + *cfg.out).dump() << "\n";
      return kUsageError;
    }
    f << result.text;
  } else {
    out << result.text;
  }
  return result.code;
}

}  // namespace polydyn::cli
