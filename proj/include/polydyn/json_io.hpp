#pragma once

#include <json.hpp>
#include <stdexcept>

#include "polydyn/hier.hpp"
#include "polydyn/laplace.hpp"
#include "polydyn/report.hpp"

namespace polydyn::json_io {

using json = nlohmann::json;

// Malformed or ill-typed input documents.
class ParseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

json to_json(const Space& s);
Space space_from_json(const json& j);

json to_json(const Polynomial& p);
Polynomial polynomial_from_json(const json& j);

// Unit is null, labels are strings, vectors are arrays of numbers, tuples are
// arrays of points. Decoding is guided by the space.
json to_json(const Point& p);
Point point_from_json(const json& j, const Space& s);
// Table keys are the canonical text forms of the points of a finite space.
Point point_from_key(const std::string& key, const Space& s);

json to_json(const Dist& d);
Dist dist_from_json(const json& j, const Space& s);

Eigen::MatrixXd matrix_from_json(const json& j);
Eigen::VectorXd vector_from_json(const json& j);

json to_json(const LawReport& r);
json to_json(const Verdict& v);

TimeMonoid time_from_json(const json& j);

/// A system together with the run parameters a spec may carry.
struct SystemSpec {
  System system;
  std::optional<Point> init;
  std::optional<Section> section;
  std::optional<double> tol;
};

// Either {"builtin": name, "params": {...}} or explicit tables:
// {"interface", "states", "time", "effect", "output": {state: position},
//  "update": {state: {direction: point | law}}, "init", "section"}.
SystemSpec system_from_json(const json& j);

/// A Gaussian model stack and its datum.
struct LaplaceSpec {
  std::vector<GaussianChannel> levels;
  GaussianState prior;
  Eigen::VectorXd data;
  LaplaceConfig config;
  std::optional<Eigen::VectorXd> init;  // flattened stack state
};

// {"levels": [{"mean": {"linear": {"A", "b"}} | {"named": "tanh", "A", "b"}, "cov"}],
//  "prior": {"mean", "cov"}, "data": [...], "lambda", "iterations", "init"}
LaplaceSpec laplace_from_json(const json& j);

json read_file(const std::string& path);

}  // namespace polydyn::json_io
