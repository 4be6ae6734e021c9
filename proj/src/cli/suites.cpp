#include <functional>

#include "polydyn/cli.hpp"
#include "polydyn/error.hpp"
#include "polydyn/examples.hpp"
#include "suites.hpp"

namespace polydyn::cli {

namespace {

using json_io::ParseError;
using json_io::to_json;

Point lab(std::size_t k) { return Point::label(std::to_string(k)); }

json law_entry(const std::string& name, const LawReport& r) {
  json j = to_json(r);
  j["name"] = name;
  j["kind"] = "law";
  return j;
}

json verdict_entry(const std::string& name, const Verdict& v) {
  json j = to_json(v);
  j["name"] = name;
  j["kind"] = "quasi_bisim";
  j["passed"] = v.holds;
  return j;
}

std::vector<Section> sections_for(const System& sys) {
  return generate_sections(sys.interface, kSectionLimit, 0x5EC7105ULL);
}

std::vector<Point> states_for(const json_io::SystemSpec& spec) {
  if (spec.system.states.is_finite()) return spec.system.states.enumerate();
  if (spec.init) return {*spec.init};
  throw ParseError("flow checks on infinite state spaces need an \"init\" state");
}

// s, t in {k * stride : 1 <= k <= 10}
TimePairs strided_pairs(Tick stride) {
  TimePairs out;
  for (Tick s = 1; s <= 10; ++s)
    for (Tick t = 1; t <= 10; ++t) out.emplace_back(s * stride, t * stride);
  return out;
}

void flow_suite(const SuiteInput& in, json& results) {
  const Tick horizon = in.horizon.value_or(8);
  if (in.spec) {
    const auto spec = json_io::system_from_json(*in.spec);
    const double tol = in.tol.value_or(spec.tol.value_or(0.0));
    const System& sys = spec.system;
    results.push_back(law_entry("flow", check_flow(sys, sections_for(sys), time_pairs_upto(horizon),
                                                   states_for(spec), tol)));
    return;
  }
  const System counter = examples::counter(6);
  TimePairs square;
  for (Tick s = 0; s <= 5; ++s)
    for (Tick t = 0; t <= 5; ++t) square.emplace_back(s, t);
  results.push_back(law_entry("flow counter", check_flow(counter, sections_for(counter), square,
                                                         counter.states.enumerate(), in.tol.value_or(0.0))));
  const System cell = examples::markov_cell(examples::cell_matrix());
  results.push_back(law_entry("flow markov cell",
                              check_flow(cell, sections_for(cell), time_pairs_upto(horizon),
                                         cell.states.enumerate(), in.tol.value_or(1e-12))));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const System r = examples::random_finite(in.seed + seed);
    results.push_back(law_entry("flow random seed " + std::to_string(in.seed + seed),
                                check_flow(r, sections_for(r), time_pairs_upto(horizon),
                                           r.states.enumerate(), in.tol.value_or(0.0))));
  }
  const System decay = examples::decay(1e-3);
  results.push_back(law_entry("flow decay", check_flow(decay, sections_for(decay), strided_pairs(100),
                                                       {Point::vec({1.0})}, in.tol.value_or(1e-6))));
}

MeasurePreservingSystem measure_from_json(const json& j) {
  if (j.contains("builtin")) {
    const std::string name = j.at("builtin").get<std::string>();
    const json params = j.value("params", json::object());
    if (name == "cyclic_shift") return examples::cyclic_shift(params.value("n", 6));
    if (name == "window_shift") return examples::window_shift(params.value("bits", 3));
    if (name == "biased_swap") return examples::biased_swap();
    throw ParseError("unknown builtin measure system \"" + name + "\"");
  }
  const Space s = json_io::space_from_json(j.at("space"));
  if (!s.is_finite()) throw ParseError("measure systems need a finite space");
  const Dist m = json_io::dist_from_json(j.at("measure"), s);
  std::map<Point, Point> table;
  for (const auto& [k, v] : j.at("map").items())
    table.emplace(json_io::point_from_key(k, s), json_io::point_from_json(v, s));
  for (const auto& p : s.enumerate())
    if (!table.count(p)) throw ParseError("the map misses " + p.str());
  try {
    return measure_system(ProbabilitySpace::make(s, m), [table](const Point& p) { return table.at(p); });
  } catch (const ShapeError& e) {
    throw ParseError(e.what());
  }
}

void measure_suite(const SuiteInput& in, json& results) {
  const auto gens = ticks_upto(in.horizon.value_or(8));
  const double tol = in.tol.value_or(0.0);
  if (in.spec) {
    results.push_back(law_entry("measure", check_measure_preserving(measure_from_json(*in.spec), gens, tol)));
    return;
  }
  results.push_back(law_entry("measure cyclic shift", check_measure_preserving(examples::cyclic_shift(6), gens, tol)));
  results.push_back(law_entry("measure window shift", check_measure_preserving(examples::window_shift(3), gens, tol)));
}

PolyMap parity_relabel() {
  const Polynomial p = Polynomial::monomial(Space::range(2), Space::range(2));
  const Polynomial q = Polynomial::monomial(Space::finite({"even", "odd"}), Space::range(2));
  return PolyMap::lens(p, q, [](const Point& i) { return Point::label(i.as_label() == "1" ? "odd" : "even"); },
                       [](const Point&, const Point& d) { return Point::label(d.as_label() == "1" ? "0" : "1"); });
}

void random_suite(const SuiteInput& in, json& results) {
  const auto ticks = ticks_upto(in.horizon.value_or(8));
  const double tol = in.tol.value_or(0.0);
  if (in.spec) {
    const std::string name = in.spec->at("builtin").get<std::string>();
    const json params = in.spec->value("params", json::object());
    const std::size_t n = params.value("n", 3), m = params.value("m", 4);
    RandomSystem rds;
    if (name == "skew_product") {
      rds = {examples::cyclic_shift(n), examples::skew_product(n, m).sys, [](const Point& s) { return s.at(0); }};
    } else if (name == "broken_skew_product") {
      rds = {examples::cyclic_shift(n), examples::broken_skew_product(n, m), [](const Point& s) { return s.at(0); }};
    } else {
      throw ParseError("unknown builtin random system \"" + name + "\"");
    }
    results.push_back(law_entry("random square " + name,
                                check_random_system(rds, all_sections(rds.sys.interface), ticks, tol)));
    return;
  }
  const RandomSystem rds = examples::skew_product();
  results.push_back(law_entry("random skew product", check_random_system(rds, all_sections(rds.sys.interface), ticks, tol)));
  const RandomSystem same = reindex_rds(PolyMap::identity(rds.sys.interface), rds, ticks);
  results.push_back(law_entry("random reindex identity", compare_systems(same.sys, rds.sys, ticks, tol)));
  const RandomSystem moved = reindex_rds(parity_relabel(), rds, ticks);
  results.push_back(law_entry("random reindex relabel",
                              check_random_system(moved, all_sections(moved.sys.interface), ticks, tol)));
  const RandomSystem six = examples::skew_product(6, 4);
  const StateMap halve = [](const Point& w) { return lab(std::stoul(w.as_label()) % 3); };
  results.push_back(law_entry("random quotient base morphism",
                              check_base_morphism(halve, six.base, examples::cyclic_shift(3), ticks, tol)));
  const RandomSystem rebased = rebase_rds(halve, examples::cyclic_shift(3), six, ticks);
  results.push_back(law_entry("random rebase quotient",
                              check_random_system(rebased, all_sections(rebased.sys.interface), ticks, tol)));
}

void bundle_suite(const SuiteInput& in, json& results) {
  if (in.spec) throw ParseError("the bundle suite runs on its bundled example only");
  const auto ticks = ticks_upto(in.horizon.value_or(8));
  const double tol = in.tol.value_or(0.0);
  const BundleSystem bs = examples::finite_bundle();
  const auto sb = all_sections(bs.base.interface);
  results.push_back(law_entry("bundle square", check_bundle(bs, all_sections(bs.total.interface), sb, ticks, tol)));
  const PolyMap phi = parity_relabel();
  const Polynomial r = Polynomial::monomial(Space::range(3), Space::range(2));
  const PolyMap psi = PolyMap::lens(phi.target, r,
                                    [](const Point& i) { return lab(i.as_label() == "odd" ? 2 : 0); },
                                    [](const Point&, const Point& d) { return d; });
  const BundleSystem once = reindex_bundle(compose_map(psi, phi), bs, ticks);
  const BundleSystem twice = reindex_bundle(psi, reindex_bundle(phi, bs, ticks), ticks);
  results.push_back(law_entry("bundle reindex functoriality", compare_systems(once.total, twice.total, ticks, tol)));
  results.push_back(law_entry("bundle reindexed square", check_bundle(once, all_sections(r), sb, ticks, tol)));
  const BundleSystem rebased = rebase_bundle([](const Point& w) { return w; }, bs.base, bs, ticks);
  results.push_back(law_entry("bundle rebase identity",
                              check_bundle(rebased, all_sections(bs.total.interface), sb, ticks, tol)));
}

void comonoid_suite(const SuiteInput& in, json& results) {
  const Space a = in.spec && in.spec->contains("space") ? json_io::space_from_json(in.spec->at("space"))
                                                        : Space::range(3);
  for (const auto& nv : comonoid_laws(a, in.horizon.value_or(16), in.tol.value_or(0.0)))
    results.push_back(verdict_entry(nv.law, nv.verdict));
}

FiniteChannel random_channel(const Space& x, const Space& y, Rng& rng) {
  Eigen::MatrixXd k(x.cardinality().value(), y.cardinality().value());
  for (Eigen::Index r = 0; r < k.rows(); ++r) {
    for (Eigen::Index c = 0; c < k.cols(); ++c) k(r, c) = 0.05 + rng.uniform();
    k.row(r) /= k.row(r).sum();
  }
  return FiniteChannel::from_matrix(x, y, k);
}

Dist random_prior(const Space& x, Rng& rng) {
  std::map<Point, double> w;
  double total = 0.0;
  for (const auto& p : x.enumerate()) total += (w[p] = 0.05 + rng.uniform());
  for (auto& [p, v] : w) v /= total;
  return Dist::from_weights(std::move(w));
}

json bayes_entry(const std::string& name, const FiniteChannel& c, const Dist& pi, const FiniteChannel& dag,
                 Tick horizon, double tol) {
  const BayesReport r = bayes_check(channel_system(c), prior_system(c.x, pi), channel_system(dag), horizon, tol);
  return verdict_entry(name, r.verdict);
}

void bayes_suite(const SuiteInput& in, json& results) {
  const Tick horizon = in.horizon.value_or(4);
  const double tol = in.tol.value_or(1e-9);
  if (in.spec) {
    const Space x = json_io::space_from_json(in.spec->at("x"));
    const Space y = json_io::space_from_json(in.spec->at("y"));
    FiniteChannel c;
    try {
      c = FiniteChannel::from_matrix(x, y, json_io::matrix_from_json(in.spec->at("channel")));
    } catch (const ShapeError& e) {
      throw ParseError(e.what());
    }
    const Dist pi = json_io::dist_from_json(in.spec->at("prior"), x);
    const BayesInversion inv = exact_bayes(c, pi);
    const double eps = in.spec->value("perturb", 0.0);
    const FiniteChannel dag = eps > 0.0 ? perturbed(inv.dagger, eps) : inv.dagger;
    json e = bayes_entry(eps > 0.0 ? "bayes perturbed inversion" : "bayes exact inversion", c, pi, dag, horizon, tol);
    json zero = json::array();
    for (const auto& p : inv.zero_evidence) zero.push_back(p.str());
    e["zero_evidence"] = zero;
    results.push_back(e);
    return;
  }
  const FiniteChannel w = examples::worked_channel();
  const Dist wp = examples::worked_prior();
  results.push_back(bayes_entry("bayes worked channel", w, wp, exact_bayes(w, wp).dagger, horizon, tol));
  Rng rng(in.seed + 2024);
  const std::vector<std::pair<std::size_t, std::size_t>> sizes{{2, 2}, {2, 3}, {3, 2}};
  for (std::size_t n = 0; n < 20; ++n) {
    const auto [nx, ny] = sizes[n % sizes.size()];
    const FiniteChannel c = random_channel(Space::range(nx), Space::range(ny), rng);
    const Dist pi = random_prior(c.x, rng);
    results.push_back(bayes_entry("bayes random channel " + std::to_string(n), c, pi, exact_bayes(c, pi).dagger,
                                  horizon, tol));
  }
}

const std::map<std::string, std::function<void(const SuiteInput&, json&)>>& registry() {
  static const std::map<std::string, std::function<void(const SuiteInput&, json&)>> r{
      {"flow", flow_suite},       {"measure", measure_suite},   {"random", random_suite},
      {"bundle", bundle_suite},   {"comonoid", comonoid_suite}, {"bayes", bayes_suite}};
  return r;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"flow", "measure", "random", "bundle", "comonoid", "bayes", "all"};
  return names;
}

json run_suite(const std::string& suite, const SuiteInput& in) {
  json results = json::array();
  if (suite == "all") {
    if (in.spec) throw ParseError("the \"all\" suite runs the bundled examples and takes no spec");
    for (const auto& name : suite_names())
      if (name != "all") registry().at(name)(in, results);
  } else {
    auto it = registry().find(suite);
    if (it == registry().end()) throw UsageError("unknown suite \"" + suite + "\"");
    it->second(in, results);
  }
  bool passed = true;
  for (const auto& r : results) passed = passed && r.at("passed").get<bool>();
  return {{"suite", suite}, {"passed", passed}, {"results", results}};
}

}  // namespace polydyn::cli
