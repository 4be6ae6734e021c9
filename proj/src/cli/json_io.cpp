#include "polydyn/json_io.hpp"

#include <cmath>
#include <fstream>

#include "polydyn/error.hpp"
#include "polydyn/examples.hpp"

namespace polydyn::json_io {

namespace {

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw ParseError(std::string("missing field \"") + key + "\" in " + j.dump());
  return j.at(key);
}

double number(const json& j) {
  if (!j.is_number()) throw ParseError("expected a number, got " + j.dump());
  return j.get<double>();
}

std::size_t count(const json& j) {
  if (!j.is_number_integer() || j.get<long long>() < 0)
    throw ParseError("expected a non-negative integer, got " + j.dump());
  return j.get<std::size_t>();
}

bool is_law(const json& j) {
  return j.is_object() && (j.contains("dirac") || j.contains("categorical") || j.contains("gaussian"));
}

Section section_from_json(const json& j, const Polynomial& p) {
  if (j.contains("constant")) {
    if (!p.has_constant_directions()) throw ParseError("constant section of a tabulated polynomial");
    return Section::constant(p, point_from_json(j.at("constant"), p.constant_directions()));
  }
  if (j.contains("table")) {
    std::map<Point, Point> values;
    for (const auto& [k, v] : j.at("table").items()) {
      const Point i = point_from_key(k, p.positions());
      values.emplace(i, point_from_json(v, p.directions(i)));
    }
    return Section::table(p, std::move(values), "spec");
  }
  throw ParseError("a section is {\"constant\": d} or {\"table\": {...}}");
}

System builtin_system(const std::string& name, const json& params) {
  const auto get = [&](const char* k, double dflt) {
    return params.contains(k) ? number(params.at(k)) : dflt;
  };
  if (name == "counter") return examples::counter(static_cast<std::size_t>(get("n", 6)));
  if (name == "clocked_counter") return examples::clocked_counter(static_cast<std::size_t>(get("n", 6)));
  if (name == "markov")
    return examples::markov_cell(params.contains("matrix") ? matrix_from_json(params.at("matrix"))
                                                           : examples::cell_matrix());
  if (name == "random_finite")
    return examples::random_finite(static_cast<std::uint64_t>(get("seed", 0)),
                                   static_cast<std::size_t>(get("max_states", 6)),
                                   static_cast<std::size_t>(get("max_positions", 3)),
                                   static_cast<std::size_t>(get("max_dirs", 3)));
  if (name == "decay") return examples::decay(get("h", 1e-3));
  if (name == "drift") return examples::drift(get("h", 1e-3));
  throw ParseError("unknown builtin system \"" + name + "\"");
}

GaussianChannel channel_from_json(const json& j) {
  const Eigen::MatrixXd cov = matrix_from_json(field(j, "cov"));
  const json& mean = field(j, "mean");
  if (mean.contains("linear")) {
    const json& lin = mean.at("linear");
    return GaussianChannel::affine(matrix_from_json(field(lin, "A")), vector_from_json(field(lin, "b")), cov);
  }
  if (mean.contains("named")) {
    const std::string name = mean.at("named").get<std::string>();
    const Eigen::MatrixXd a = matrix_from_json(field(mean, "A"));
    const Eigen::VectorXd b = vector_from_json(field(mean, "b"));
    if (b.size() != a.rows()) throw ParseError("offset does not match the weight matrix");
    if (name == "tanh") {
      return GaussianChannel::nonlinear(
          static_cast<std::size_t>(a.cols()), static_cast<std::size_t>(a.rows()),
          [a, b](const Eigen::VectorXd& x) -> Eigen::VectorXd { return (a * x + b).array().tanh(); },
          [a, b](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
            const Eigen::ArrayXd t = (a * x + b).array().tanh();
            return (1.0 - t * t).matrix().asDiagonal() * a;
          },
          cov);
    }
    throw ParseError("unknown named mean \"" + name + "\"");
  }
  throw ParseError("a mean is {\"linear\": ...} or {\"named\": ...}");
}

}  // namespace

json to_json(const Space& s) {
  switch (s.kind()) {
    case Space::Kind::Unit:
      return {{"kind", "unit"}};
    case Space::Kind::Finite:
      return {{"kind", "finite"}, {"labels", s.labels()}};
    case Space::Kind::Euclid:
      return {{"kind", "euclid"}, {"dim", s.dim()}};
    case Space::Kind::Prod: {
      json f = json::array();
      for (const auto& x : s.factors()) f.push_back(to_json(x));
      return {{"kind", "prod"}, {"factors", f}};
    }
  }
  return {};
}

Space space_from_json(const json& j) {
  const std::string kind = field(j, "kind").get<std::string>();
  if (kind == "unit") return Space::unit();
  if (kind == "finite") {
    try {
      return Space::finite(field(j, "labels").get<std::vector<std::string>>());
    } catch (const ShapeError& e) {
      throw ParseError(e.what());
    }
  }
  if (kind == "range") return Space::range(count(field(j, "n")));
  if (kind == "euclid") return Space::euclid(count(field(j, "dim")));
  if (kind == "prod") {
    std::vector<Space> factors;
    for (const auto& f : field(j, "factors")) factors.push_back(space_from_json(f));
    return Space::prod(std::move(factors));
  }
  throw ParseError("unknown space kind \"" + kind + "\"");
}

json to_json(const Polynomial& p) {
  json dirs;
  if (p.has_constant_directions()) {
    dirs["constant"] = to_json(p.constant_directions());
  } else {
    json t = json::object();
    for (const auto& [i, s] : p.table()) t[i.str()] = to_json(s);
    dirs["table"] = t;
  }
  return {{"positions", to_json(p.positions())}, {"directions", dirs}};
}

Polynomial polynomial_from_json(const json& j) {
  const Space pos = space_from_json(field(j, "positions"));
  const json& dirs = field(j, "directions");
  if (dirs.contains("constant")) return Polynomial::monomial(pos, space_from_json(dirs.at("constant")));
  if (dirs.contains("table")) {
    if (!pos.is_finite()) throw ParseError("tabulated directions need finite positions");
    std::map<Point, Space> table;
    for (const auto& [k, v] : dirs.at("table").items()) table.emplace(point_from_key(k, pos), space_from_json(v));
    try {
      return Polynomial::tabulated(pos, std::move(table));
    } catch (const ShapeError& e) {
      throw ParseError(e.what());
    }
  }
  throw ParseError("directions are {\"constant\": space} or {\"table\": {...}}");
}

json to_json(const Point& p) {
  if (p.is_unit()) return nullptr;
  if (p.is_label()) return p.as_label();
  if (p.is_vec()) return p.as_vec();
  json a = json::array();
  for (const auto& x : p.as_tuple()) a.push_back(to_json(x));
  return a;
}

Point point_from_json(const json& j, const Space& s) {
  Point p;
  switch (s.kind()) {
    case Space::Kind::Unit:
      if (!j.is_null()) throw ParseError("expected null for the unit point, got " + j.dump());
      return Point::unit();
    case Space::Kind::Finite:
      if (j.is_string()) {
        p = Point::label(j.get<std::string>());
      } else if (j.is_number_integer()) {
        p = Point::label(std::to_string(j.get<long long>()));
      } else {
        throw ParseError("expected a label, got " + j.dump());
      }
      break;
    case Space::Kind::Euclid: {
      if (!j.is_array()) throw ParseError("expected a vector, got " + j.dump());
      Point::Vec v;
      for (const auto& x : j) v.push_back(number(x));
      p = Point::vec(std::move(v));
      break;
    }
    case Space::Kind::Prod: {
      if (!j.is_array() || j.size() != s.factors().size())
        throw ParseError("expected a tuple of " + std::to_string(s.factors().size()) + ", got " + j.dump());
      Point::Tuple t;
      for (std::size_t k = 0; k < j.size(); ++k) t.push_back(point_from_json(j[k], s.factor(k)));
      p = Point::tuple(std::move(t));
      break;
    }
  }
  if (!s.contains(p)) throw ParseError(p.str() + " is not a point of " + s.str());
  return p;
}

Point point_from_key(const std::string& key, const Space& s) {
  if (s.kind() == Space::Kind::Finite) {
    const Point p = Point::label(key);
    if (!s.contains(p)) throw ParseError("\"" + key + "\" is not a point of " + s.str());
    return p;
  }
  if (s.is_finite())
    for (const auto& p : s.enumerate())
      if (p.str() == key) return p;
  throw ParseError("\"" + key + "\" is not a point of " + s.str());
}

json to_json(const Dist& d) {
  if (d.is_dirac()) return {{"dirac", to_json(d.point())}};
  if (d.is_finite()) {
    json w = json::object();
    for (const auto& [p, x] : d.atoms()) w[p.str()] = x;
    return {{"categorical", w}};
  }
  const auto& g = d.gaussian();
  json cov = json::array();
  for (Eigen::Index r = 0; r < g.cov.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < g.cov.cols(); ++c) row.push_back(g.cov(r, c));
    cov.push_back(row);
  }
  return {{"gaussian", {{"mean", to_vec(g.mean)}, {"cov", cov}}}};
}

Dist dist_from_json(const json& j, const Space& s) {
  try {
    if (j.contains("dirac")) return Dist::dirac(point_from_json(j.at("dirac"), s));
    if (j.contains("categorical")) {
      std::map<Point, double> w;
      for (const auto& [k, v] : j.at("categorical").items()) w[point_from_key(k, s)] = number(v);
      return Dist::from_weights(std::move(w));
    }
    if (j.contains("gaussian")) {
      const json& g = j.at("gaussian");
      const Eigen::VectorXd mean = vector_from_json(field(g, "mean"));
      if (s.kind() != Space::Kind::Euclid || s.dim() != static_cast<std::size_t>(mean.size()))
        throw ParseError("Gaussian law does not live on " + s.str());
      return Dist::gaussian(mean, matrix_from_json(field(g, "cov")));
    }
  } catch (const ShapeError& e) {
    throw ParseError(e.what());
  }
  throw ParseError("a law is {\"dirac\"}, {\"categorical\"} or {\"gaussian\"}, got " + j.dump());
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw ParseError("expected a matrix, got " + j.dump());
  const std::size_t rows = j.size(), cols = j[0].size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ParseError("ragged matrix " + j.dump());
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = number(j[r][c]);
  }
  return m;
}

Eigen::VectorXd vector_from_json(const json& j) {
  if (!j.is_array()) throw ParseError("expected a vector, got " + j.dump());
  Eigen::VectorXd v(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) v(k) = number(j[k]);
  return v;
}

json to_json(const LawReport& r) {
  json w = json::array();
  for (const auto& v : r.witnesses) w.push_back({{"where", v.where}, {"deviation", v.deviation}});
  return {{"law", r.law},
          {"passed", r.passed()},
          {"checked", r.checked},
          {"failed", r.failed},
          {"max_deviation", r.max_deviation},
          {"witnesses", w}};
}

json to_json(const Verdict& v) {
  json out = {{"holds", v.holds},
              {"deviation", v.deviation},
              {"alpha", v.alpha},
              {"beta", v.beta},
              {"pairs_checked", v.pairs_checked}};
  if (v.witness)
    out["witness"] = {{"section", v.witness->section}, {"t", v.witness->t}, {"deviation", v.witness->deviation}};
  return out;
}

TimeMonoid time_from_json(const json& j) {
  const std::string kind = field(j, "kind").get<std::string>();
  if (kind == "discrete") return TimeMonoid::discrete();
  if (kind == "real") {
    try {
      return TimeMonoid::real(number(field(j, "h")));
    } catch (const ShapeError& e) {
      throw ParseError(e.what());
    }
  }
  throw ParseError("unknown time kind \"" + kind + "\"");
}

SystemSpec system_from_json(const json& j) {
  SystemSpec spec;
  if (j.contains("builtin")) {
    spec.system = builtin_system(j.at("builtin").get<std::string>(), j.value("params", json::object()));
  } else {
    const Polynomial p = polynomial_from_json(field(j, "interface"));
    const Space states = space_from_json(field(j, "states"));
    if (!states.is_finite()) throw ParseError("tabulated systems need finite states");
    const std::string effect = j.value("effect", "deterministic");
    if (effect != "deterministic" && effect != "stochastic") throw ParseError("unknown effect \"" + effect + "\"");
    std::map<Point, Point> out;
    for (const auto& [k, v] : field(j, "output").items()) {
      const Point s = point_from_key(k, states);
      out.emplace(s, point_from_json(v, p.positions()));
    }
    std::map<std::pair<Point, Point>, Dist> upd;
    for (const auto& [k, row] : field(j, "update").items()) {
      const Point s = point_from_key(k, states);
      auto it = out.find(s);
      if (it == out.end()) throw ParseError("update given for " + k + " without an output");
      const Space& fibre = p.directions(it->second);
      for (const auto& [dk, v] : row.items()) {
        const Point d = point_from_key(dk, fibre);
        upd.emplace(std::make_pair(s, d), is_law(v) ? dist_from_json(v, states)
                                                    : Dist::dirac(point_from_json(v, states)));
      }
    }
    for (const auto& s : states.enumerate()) {
      auto it = out.find(s);
      if (it == out.end()) throw ParseError("no output for state " + s.str());
      for (const auto& d : p.directions(it->second).enumerate())
        if (!upd.count({s, d})) throw ParseError("no update for state " + s.str() + " and direction " + d.str());
    }
    try {
      spec.system = mk_system(
          p, states, [out](Tick, const Point& s) { return out.at(s); },
          [upd](Tick, const Point& s, const Point& d) { return upd.at({s, d}); },
          j.contains("time") ? time_from_json(j.at("time")) : TimeMonoid::discrete(),
          effect == "stochastic" ? Effect::Stochastic : Effect::Deterministic);
    } catch (const ShapeError& e) {
      throw ParseError(e.what());
    }
  }
  if (j.contains("init")) spec.init = point_from_json(j.at("init"), spec.system.states);
  if (j.contains("section")) spec.section = section_from_json(j.at("section"), spec.system.interface);
  if (j.contains("tol")) spec.tol = number(j.at("tol"));
  return spec;
}

LaplaceSpec laplace_from_json(const json& j) {
  LaplaceSpec spec;
  try {
    for (const auto& level : field(j, "levels")) spec.levels.push_back(channel_from_json(level));
    if (spec.levels.empty()) throw ParseError("a model needs at least one level");
    const json& prior = field(j, "prior");
    spec.prior = {vector_from_json(field(prior, "mean")), matrix_from_json(field(prior, "cov"))};
    require_regular(spec.prior.cov, "prior covariance");
    spec.data = vector_from_json(field(j, "data"));
  } catch (const ShapeError& e) {
    throw ParseError(e.what());
  } catch (const SingularError& e) {
    throw ParseError(e.what());
  }
  if (static_cast<std::size_t>(spec.prior.mean.size()) != spec.levels.front().in_dim)
    throw ParseError("prior dimension does not match the top level");
  if (static_cast<std::size_t>(spec.data.size()) != spec.levels.back().out_dim)
    throw ParseError("data dimension does not match the bottom level");
  if (j.contains("lambda")) spec.config.lambda = number(j.at("lambda"));
  if (j.contains("iterations")) spec.config.iterations = count(j.at("iterations"));
  if (j.contains("init")) spec.init = vector_from_json(j.at("init"));
  return spec;
}

json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace polydyn::json_io
