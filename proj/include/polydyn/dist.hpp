#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "polydyn/rng.hpp"
#include "polydyn/space.hpp"

namespace polydyn {

struct GaussianLaw {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Element of the probability monad. Two exact regimes are supported: finite
/// support (Dirac / Categorical) and Gaussian measures on Euclidean space.
class Dist {
 public:
  enum class Kind { Dirac, Categorical, Gaussian };

  static constexpr double kNormTol = 1e-12;
  static constexpr double kPsdTol = 1e-10;

  static Dist dirac(Point p);
  // Weights must be non-negative and sum to one within kNormTol. Zero atoms are dropped.
  static Dist categorical(std::map<Point, double> weights);
  static Dist gaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov);
  static Dist uniform(const Space& s);
  // Categorical, collapsed to a Dirac when one atom carries all the mass.
  static Dist from_weights(std::map<Point, double> weights);

  Kind kind() const { return static_cast<Kind>(rep_.index()); }
  bool is_dirac() const { return kind() == Kind::Dirac; }
  bool is_finite() const { return kind() != Kind::Gaussian; }
  bool is_gaussian() const { return kind() == Kind::Gaussian; }

  const Point& point() const;
  const GaussianLaw& gaussian() const;
  // Atoms of a finite-support law in point order.
  std::vector<std::pair<Point, double>> atoms() const;
  double prob(const Point& p) const;

  // Mean and covariance of a law on vectors (Gaussian, or finite support on vectors).
  Eigen::VectorXd mean() const;
  Eigen::MatrixXd covariance() const;

  std::string str() const;

 private:
  std::variant<Point, std::map<Point, double>, GaussianLaw> rep_;
};

struct Affine {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

/// A plain function between spaces, optionally tagged with an affine form so
/// that Gaussian pushforwards stay exact.
struct PointMap {
  std::function<Point(const Point&)> fn;
  std::optional<Affine> affine;

  Point operator()(const Point& x) const { return fn(x); }

  static PointMap identity();
  static PointMap of(std::function<Point(const Point&)> f) { return {std::move(f), std::nullopt}; }
  static PointMap affine_map(Eigen::MatrixXd A, Eigen::VectorXd b);
};

// x |-> N(A x + b, noise)
struct AffineGaussian {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::MatrixXd noise;
};

/// A Kleisli morphism X -> Dist Y.
struct Kernel {
  std::function<Dist(const Point&)> fn;
  std::optional<AffineGaussian> affine;

  Dist operator()(const Point& x) const { return fn(x); }

  static Kernel unit();
  static Kernel of(std::function<Dist(const Point&)> f) { return {std::move(f), std::nullopt}; }
  // eta after f
  static Kernel pure(PointMap f);
  static Kernel affine_gaussian(Eigen::MatrixXd A, Eigen::VectorXd b, Eigen::MatrixXd noise);
  // Row-stochastic matrix over the labels of a finite space: K(i, j) = P(j | i).
  static Kernel stochastic_matrix(const Space& s, const Eigen::MatrixXd& K);
};

Dist pushforward(const PointMap& f, const Dist& d);
// Averages k over d (monad multiplication after the functor action).
Dist kleisli_extend(const Kernel& k, const Dist& d);
// second after first, by Chapman-Kolmogorov summation or Gaussian marginalization.
Kernel kleisli_compose(const Kernel& second, const Kernel& first);
// Independent product; points of the result are pairs, Gaussian means are concatenated.
Dist dst(const Dist& a, const Dist& b);
Point sample(const Dist& d, Rng& rng);

// Sup-norm discrepancy between two laws. Finite laws compare atom weights, except
// that two single vector atoms compare coordinates. Gaussians compare parameters.
double distance(const Dist& a, const Dist& b);

Eigen::VectorXd to_eigen(const Point::Vec& v);
Point::Vec to_vec(const Eigen::VectorXd& v);

}  // namespace polydyn
