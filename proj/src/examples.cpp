#include "polydyn/examples.hpp"

#include <algorithm>

#include "polydyn/error.hpp"

namespace polydyn::examples {

namespace {

Point lab(std::size_t k) { return Point::label(std::to_string(k)); }
std::size_t num(const Point& p) { return std::stoul(p.as_label()); }

// Uniform draw from [0, n).
std::size_t below(Rng& rng, std::size_t n) { return static_cast<std::size_t>(rng.uniform() * n); }

}  // namespace

System counter(std::size_t n) {
  return mk_system(Polynomial::y(), Space::range(n), [](Tick, const Point&) { return Point::unit(); },
                   [n](Tick, const Point& s, const Point&) { return Dist::dirac(lab((num(s) + 1) % n)); });
}

Eigen::MatrixXd cell_matrix() {
  Eigen::MatrixXd k(2, 2);
  k << 0.9, 0.1, 0.2, 0.8;
  return k;
}

System markov_cell(const Eigen::MatrixXd& k) {
  const Space s = Space::range(static_cast<std::size_t>(k.rows()));
  const Kernel kernel = Kernel::stochastic_matrix(s, k);
  return mk_system(Polynomial::y(), s, [](Tick, const Point&) { return Point::unit(); },
                   [kernel](Tick, const Point& x, const Point&) { return kernel(x); },
                   TimeMonoid::discrete(), Effect::Stochastic);
}

System clocked_counter(std::size_t n) {
  return mk_system(Polynomial::y(), Space::range(n), [](Tick, const Point&) { return Point::unit(); },
                   [n](Tick t, const Point& s, const Point&) { return Dist::dirac(lab((num(s) + t) % n)); });
}

System random_finite(std::uint64_t seed, std::size_t max_states, std::size_t max_positions,
                     std::size_t max_dirs) {
  Rng rng(seed);
  const std::size_t ns = 1 + below(rng, max_states);
  const std::size_t np = 1 + below(rng, max_positions);
  std::map<Point, Space> dirs;
  for (std::size_t i = 0; i < np; ++i) dirs.emplace(lab(i), Space::range(1 + below(rng, max_dirs)));
  const Polynomial p = Polynomial::tabulated(Space::range(np), dirs);
  std::map<Point, Point> out;
  std::map<std::pair<Point, Point>, Point> upd;
  for (std::size_t s = 0; s < ns; ++s) {
    const Point i = lab(below(rng, np));
    out.emplace(lab(s), i);
    for (const auto& d : dirs.at(i).enumerate()) upd.emplace(std::make_pair(lab(s), d), lab(below(rng, ns)));
  }
  return from_ncoalg({p, Space::range(ns), std::move(out), std::move(upd)});
}

System decay(double h) {
  return from_vector_field(
      Polynomial::y(), 1, [](const Eigen::VectorXd& x, const Point&) -> Eigen::VectorXd { return -x; },
      [](const Eigen::VectorXd&) { return Point::unit(); }, h);
}

System drift(double h) {
  return from_vector_field(
      Polynomial::monomial(Space::euclid(1), Space::euclid(1)), 1,
      [](const Eigen::VectorXd&, const Point& a) -> Eigen::VectorXd { return to_eigen(a.as_vec()); },
      [](const Eigen::VectorXd& x) { return Point::vec(to_vec(x)); }, h);
}

MeasurePreservingSystem cyclic_shift(std::size_t n) {
  const Space s = Space::range(n);
  return measure_system(ProbabilitySpace::make(s, Dist::uniform(s)),
                        [n](const Point& w) { return lab((num(w) + 1) % n); });
}

MeasurePreservingSystem window_shift(std::size_t bits) {
  std::vector<Space> coins(bits, Space::range(2));
  const Space s = Space::prod(coins);
  return measure_system(ProbabilitySpace::make(s, Dist::uniform(s)), [](const Point& w) {
    Point::Tuple t = w.as_tuple();
    std::rotate(t.begin(), t.begin() + 1, t.end());
    return Point::tuple(std::move(t));
  });
}

MeasurePreservingSystem biased_swap() {
  const Space s = Space::range(2);
  return measure_system(ProbabilitySpace::make(s, Dist::categorical({{lab(0), 0.9}, {lab(1), 0.1}})),
                        [](const Point& w) { return lab(1 - num(w)); });
}

namespace {

System skew_system(std::size_t n, std::size_t m, bool broken) {
  const Polynomial p = Polynomial::monomial(Space::range(2), Space::range(2));
  return mk_system(
      p, Space::pair(Space::range(n), Space::range(m)),
      [](Tick, const Point& s) { return lab(num(s.at(1)) % 2); },
      [n, m, broken](Tick, const Point& s, const Point& a) {
        const std::size_t w = num(s.at(0)), x = num(s.at(1));
        const std::size_t next_w = broken && x == 0 ? 0 : (w + 1) % n;
        return Dist::dirac(Point::pair(lab(next_w), lab((x + w + num(a)) % m)));
      });
}

}  // namespace

RandomSystem skew_product(std::size_t n, std::size_t m) {
  return make_random_system(cyclic_shift(n), skew_system(n, m, false),
                            [](const Point& s) { return s.at(0); });
}

System broken_skew_product(std::size_t n, std::size_t m) { return skew_system(n, m, true); }

BundleSystem finite_bundle() {
  const Polynomial b =
      Polynomial::tabulated(Space::range(2), {{lab(0), Space::range(2)}, {lab(1), Space::unit()}});
  System base = mk_system(b, Space::range(3), [](Tick, const Point& w) { return lab(num(w) % 2); },
                          [](Tick, const Point& w, const Point&) { return Dist::dirac(lab((num(w) + 1) % 3)); });
  const Polynomial p = Polynomial::monomial(Space::range(2), Space::range(2));
  System total = mk_system(
      p, Space::pair(Space::range(3), Space::range(2)), [](Tick, const Point& s) { return s.at(1); },
      [](Tick, const Point& s, const Point& a) {
        const std::size_t w = num(s.at(0)), x = num(s.at(1));
        return Dist::dirac(Point::pair(lab((w + 1) % 3), lab((x + num(a) + (w == 0)) % 2)));
      });
  return make_bundle(std::move(base), std::move(total), [](const Point& s) { return s.at(0); });
}

FiniteChannel worked_channel() {
  Eigen::MatrixXd k(2, 2);
  k << 0.8, 0.2, 0.3, 0.7;
  return FiniteChannel::from_matrix(Space::range(2), Space::range(2), k);
}

Dist worked_prior() { return Dist::categorical({{lab(0), 0.6}, {lab(1), 0.4}}); }

GaussianChannel scalar_model() {
  return GaussianChannel::affine(Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::VectorXd::Zero(1),
                                 Eigen::MatrixXd::Identity(1, 1));
}

GaussianState scalar_prior() { return {Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1)}; }

}  // namespace polydyn::examples
