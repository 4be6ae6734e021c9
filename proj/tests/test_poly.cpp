#include <doctest.h>

#include <set>

#include "polydyn/error.hpp"
#include "polydyn/poly.hpp"

using namespace polydyn;

namespace {

Point lab(const std::string& s) { return Point::label(s); }
Point lab(int k) { return Point::label(std::to_string(k)); }
int num(const Point& p) { return std::stoi(p.as_label()); }

// Deterministic lens range(n) y^range(m) -> range(k) y^range(l) from integer tables.
PolyMap int_lens(int n, int m, int k, int l, std::function<int(int)> f, std::function<int(int, int)> g) {
  return PolyMap::lens(Polynomial::monomial(Space::range(n), Space::range(m)),
                       Polynomial::monomial(Space::range(k), Space::range(l)),
                       [f](const Point& i) { return lab(f(num(i))); },
                       [g](const Point& i, const Point& d) { return lab(g(num(i), num(d))); });
}

// Largest weight discrepancy of backward laws over every input of the source.
double map_gap(const PolyMap& a, const PolyMap& b) {
  double w = 0.0;
  for (const auto& i : a.source.positions().enumerate()) {
    if (!(a.fwd(i) == b.fwd(i))) return 1.0;
    for (const auto& d : a.target.directions(a.fwd(i)).enumerate())
      w = std::max(w, distance(a.back(i, d), b.back(i, d)));
  }
  return w;
}

PolyMap coin_map() {
  // range(2) y^range(2) -> range(2) y^range(2), backward flips d with probability 0.25 + i / 4
  const Polynomial p = Polynomial::monomial(Space::range(2), Space::range(2));
  return PolyMap::stochastic(p, p, [](const Point& i) { return i; },
                             [](const Point& i, const Point& d) {
                               const double flip = 0.25 + num(i) / 4.0;
                               return Dist::from_weights({{d, 1.0 - flip}, {lab(1 - num(d)), flip}});
                             });
}

}  // namespace

TEST_CASE("monomials") {
  CHECK(Polynomial::monomial(Space::unit(), Space::unit()).is_y());
  const Polynomial p = Polynomial::monomial(Space::finite({"a", "b"}), Space::finite({"s", "t", "u"}));
  CHECK(p.positions().cardinality() == 2u);
  for (const auto& i : p.positions().enumerate()) CHECK(p.directions(i).cardinality() == 3u);
  const Polynomial lin = Polynomial::linear(Space::euclid(2));
  CHECK(lin.positions() == Space::euclid(2));
  CHECK(lin.directions(Point::vec({0, 0})) == Space::unit());

  CHECK_THROWS_AS(Polynomial::tabulated(Space::euclid(1), {}), ShapeError);
  CHECK_THROWS_AS(Polynomial::tabulated(Space::range(2), {{lab(0), Space::unit()}}), ShapeError);
  const Polynomial tab =
      Polynomial::tabulated(Space::range(2), {{lab(0), Space::unit()}, {lab(1), Space::range(3)}});
  CHECK(tab.directions(lab(1)).cardinality() == 3u);
  CHECK(section_count(tab) == 3u);
}

TEST_CASE("tensor of polynomials") {
  const Polynomial p = Polynomial::monomial(Space::range(2), Space::range(3));
  const Polynomial q = Polynomial::monomial(Space::range(5), Space::range(7));
  const Polynomial pq = tensor(p, q);
  CHECK(pq.positions().cardinality() == 10u);
  for (const auto& ij : pq.positions().enumerate()) CHECK(pq.directions(ij).cardinality() == 21u);
  const Polynomial py = tensor(p, Polynomial::y());
  CHECK(py.positions() == Space::pair(p.positions(), Space::unit()));
  CHECK(normalize(py) == p);
  CHECK(normalize(tensor(Polynomial::y(), Polynomial::y())).is_y());
}

TEST_CASE("composition of polynomial maps") {
  const Polynomial p = Polynomial::monomial(Space::range(3), Space::range(2));
  const PolyMap f = int_lens(3, 2, 4, 3, [](int i) { return (i + 1) % 4; }, [](int i, int d) { return (i + d) % 2; });
  const PolyMap g = int_lens(4, 3, 2, 2, [](int j) { return j % 2; }, [](int j, int e) { return (j * e) % 3; });
  CHECK(map_gap(compose_map(PolyMap::identity(f.target), f), f) == 0.0);
  CHECK(map_gap(compose_map(f, PolyMap::identity(p)), f) == 0.0);

  // pointwise function-composition oracle
  const PolyMap gf = compose_map(g, f);
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 4;
    CHECK(num(gf.fwd(lab(i))) == j % 2);
    for (int e = 0; e < 2; ++e) CHECK(num(gf.back_point(lab(i), lab(e))) == (i + (j * e) % 3) % 2);
  }
  const PolyMap h = int_lens(2, 2, 2, 2, [](int k) { return 1 - k; }, [](int, int d) { return d; });
  CHECK(map_gap(compose_map(h, compose_map(g, f)), compose_map(compose_map(h, g), f)) == 0.0);
  CHECK(gf.effect == Effect::Deterministic);
  CHECK_THROWS_AS(compose_map(f, g), ShapeError);

  // Chapman-Kolmogorov sum over the intermediate direction
  const PolyMap c = coin_map();
  const PolyMap cc = compose_map(c, c);
  CHECK(cc.effect == Effect::Stochastic);
  for (int i = 0; i < 2; ++i) {
    const double q = 0.25 + i / 4.0;
    for (int d = 0; d < 2; ++d) {
      const double stay = (1 - q) * (1 - q) + q * q;
      CHECK(cc.back(lab(i), lab(d)).prob(lab(d)) == doctest::Approx(stay).epsilon(1e-14));
      CHECK(cc.back(lab(i), lab(d)).prob(lab(1 - d)) == doctest::Approx(1 - stay).epsilon(1e-14));
    }
  }
  CHECK_THROWS_AS(c.back_point(lab(0), lab(0)), ShapeError);
}

TEST_CASE("tensor of polynomial maps") {
  const Polynomial p = Polynomial::monomial(Space::range(2), Space::range(2));
  const Polynomial q = Polynomial::monomial(Space::range(3), Space::unit());
  CHECK(map_gap(tensor_map(PolyMap::identity(p), PolyMap::identity(q)), PolyMap::identity(tensor(p, q))) == 0.0);

  const PolyMap f = int_lens(2, 2, 2, 2, [](int i) { return 1 - i; }, [](int i, int d) { return i ^ d; });
  const PolyMap g = int_lens(3, 1, 3, 1, [](int j) { return (j + 1) % 3; }, [](int, int) { return 0; });
  const PolyMap f2 = int_lens(2, 2, 2, 2, [](int i) { return i; }, [](int, int d) { return 1 - d; });
  const PolyMap g2 = int_lens(3, 1, 3, 1, [](int j) { return (2 * j) % 3; }, [](int, int) { return 0; });
  const PolyMap fg = tensor_map(f, g);
  CHECK(fg.effect == Effect::Deterministic);
  CHECK(fg.back(Point::pair(lab(1), lab(2)), Point::pair(lab(0), lab(0))).is_dirac());
  CHECK(map_gap(tensor_map(compose_map(f2, f), compose_map(g2, g)),
                compose_map(tensor_map(f2, g2), tensor_map(f, g))) == 0.0);

  // backward laws of stochastic factors multiply
  const PolyMap c = coin_map();
  const PolyMap cc = tensor_map(c, c);
  for (const auto& ij : cc.source.positions().enumerate())
    for (const auto& de : cc.target.directions(cc.fwd(ij)).enumerate()) {
      const Dist joint = cc.back(ij, de);
      const Dist m1 = c.back(ij.at(0), de.at(0)), m2 = c.back(ij.at(1), de.at(1));
      for (const auto& [a, wa] : m1.atoms())
        for (const auto& [b, wb] : m2.atoms()) CHECK(joint.prob(Point::pair(a, b)) == doctest::Approx(wa * wb));
    }
}

TEST_CASE("monoidal structure maps") {
  const Polynomial p = Polynomial::monomial(Space::range(2), Space::range(3));
  const Polynomial q = Polynomial::monomial(Space::range(3), Space::range(2));
  const Polynomial r = Polynomial::linear(Space::range(2));
  const PolyMap ur = unitor_right(p);
  CHECK(ur.source == tensor(p, Polynomial::y()));
  CHECK(ur.target == p);
  const PolyMap ul = unitor_left(p);
  CHECK(ul.source == tensor(Polynomial::y(), p));
  const PolyMap b = braiding(p, q);
  CHECK(map_gap(compose_map(braiding(q, p), b), PolyMap::identity(tensor(p, q))) == 0.0);
  const PolyMap a = associator(p, q, r);
  CHECK(a.source == tensor(tensor(p, q), r));
  CHECK(a.target == tensor(p, tensor(q, r)));
}

TEST_CASE("sections") {
  CHECK(section_count(Polynomial::y()) == 1u);
  CHECK(section_count(Polynomial::linear(Space::range(5))) == 1u);
  const Polynomial p = Polynomial::monomial(Space::range(2), Space::range(3));
  CHECK(section_count(p) == 9u);
  const auto all = all_sections(p);
  CHECK(all.size() == 9);
  std::set<std::pair<Point, Point>> seen;
  for (const auto& s : all) seen.emplace(s(lab(0)), s(lab(1)));
  CHECK(seen.size() == 9);
  CHECK(generate_sections(p, 100, 1).size() == 9);
  const auto sampled = generate_sections(Polynomial::monomial(Space::range(3), Space::euclid(1)), 5, 7);
  CHECK(sampled.size() == 5);
  const auto again = generate_sections(Polynomial::monomial(Space::range(3), Space::euclid(1)), 5, 7);
  for (std::size_t k = 0; k < sampled.size(); ++k) CHECK(sampled[k](lab(1)) == again[k](lab(1)));
}

TEST_CASE("pulling sections back") {
  const Polynomial q = Polynomial::monomial(Space::range(4), Space::range(3));
  const Section tau = Section::table(q, {{lab(0), lab(2)}, {lab(1), lab(0)}, {lab(2), lab(1)}, {lab(3), lab(1)}});
  const Section same = pull_section(PolyMap::identity(q), tau);
  for (const auto& j : q.positions().enumerate()) CHECK(same(j) == tau(j));

  const PolyMap constant = int_lens(2, 2, 4, 3, [](int i) { return 3 * i; }, [](int, int) { return 1; });
  const Section s0 = pull_section(constant, tau);
  CHECK(s0(lab(0)) == lab(1));
  CHECK(s0(lab(1)) == lab(1));

  const PolyMap phi = int_lens(2, 2, 4, 3, [](int i) { return i + 1; }, [](int i, int d) { return (i + d) % 2; });
  const Section pulled = pull_section(phi, tau);
  for (int i = 0; i < 2; ++i) CHECK(pulled(lab(i)) == phi.back_point(lab(i), tau(phi.fwd(lab(i)))));

  const PolyMap psi = int_lens(4, 3, 2, 2, [](int j) { return j % 2; }, [](int j, int e) { return (j + e) % 3; });
  const Section sigma = Section::constant(psi.target, lab(1));
  const Section lhs = pull_section(compose_map(psi, phi), sigma);
  const Section rhs = pull_section(phi, pull_section(psi, sigma));
  for (int i = 0; i < 2; ++i) CHECK(lhs(lab(i)) == rhs(lab(i)));

  CHECK_THROWS_AS(pull_section(coin_map(), Section::constant(coin_map().target, lab(0))), ShapeError);
}

TEST_CASE("time monoids") {
  const TimeMonoid d = TimeMonoid::discrete();
  CHECK(d.real_time(5) == 5.0);
  const TimeMonoid r = TimeMonoid::real(0.25);
  CHECK(r.ticks(1.0) == 4u);
  CHECK(r.ticks(0.0) == 0u);
  CHECK_THROWS_AS(r.ticks(0.3), ShapeError);
  CHECK_THROWS_AS(TimeMonoid::real(0.0), ShapeError);
  CHECK_FALSE(d == r);
  CHECK(TimeMonoid::real(0.25) == r);
}
