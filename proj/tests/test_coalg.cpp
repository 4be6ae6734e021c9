#include <doctest.h>

#include <cmath>

#include "polydyn/error.hpp"
#include "polydyn/examples.hpp"

using namespace polydyn;

namespace {

Point lab(int k) { return Point::label(std::to_string(k)); }
int num(const Point& p) { return std::stoi(p.as_label()); }

// Machine over range(2) y with outputs o and successor table next.
System machine(std::vector<int> o, std::vector<int> next) {
  return mk_system(
      Polynomial::linear(Space::range(2)), Space::range(o.size()),
      [o](Tick, const Point& s) { return lab(o[num(s)]); },
      [next](Tick, const Point& s, const Point&) { return Dist::dirac(lab(next[num(s)])); });
}

// Two positions with direction spaces of size 2 and 3; update adds the direction.
System two_position_system() {
  const Polynomial p = Polynomial::tabulated(Space::range(2), {{lab(0), Space::range(2)}, {lab(1), Space::range(3)}});
  return mk_system(p, Space::range(5), [](Tick, const Point& s) { return lab(num(s) % 2); },
                   [](Tick, const Point& s, const Point& d) { return Dist::dirac(lab((num(s) + num(d) + 1) % 5)); });
}

}  // namespace

TEST_CASE("system construction validates shapes") {
  const System c = examples::counter(6);
  CHECK(c.interface.is_y());
  CHECK(c.update(1, lab(5), Point::unit()).point() == lab(0));
  CHECK_THROWS_AS(mk_system(Polynomial::linear(Space::range(2)), Space::range(2),
                            [](Tick, const Point&) { return lab(7); },
                            [](Tick, const Point& s, const Point&) { return Dist::dirac(s); }),
                  ShapeError);
  CHECK_THROWS_AS(mk_system(Polynomial::y(), Space::range(2), [](Tick, const Point&) { return Point::unit(); },
                            [](Tick, const Point&, const Point&) { return Dist::dirac(lab(9)); }),
                  ShapeError);
  CHECK_THROWS_AS(mk_system(Polynomial::y(), Space::range(2), [](Tick, const Point&) { return Point::unit(); },
                            [](Tick, const Point&, const Point&) { return Dist::uniform(Space::range(2)); }),
                  ShapeError);
  // output-only systems ignore their unit direction
  const System out_only = machine({0, 1, 1}, {1, 2, 0});
  CHECK(out_only.update(1, lab(0), Point::unit()).point() == lab(1));
  CHECK_THROWS_AS(two_position_system().update(1, lab(0), lab(2)), ShapeError);
}

TEST_CASE("closures") {
  const System c = examples::counter(6);
  const ClosedSystem cl = closure(c, all_sections(Polynomial::y()).front());
  for (int s = 0; s < 6; ++s)
    for (Tick t = 0; t < 9; ++t) CHECK(num(cl.step(t, lab(s)).point()) == int((s + t) % 6));

  const System d = examples::drift(0.5);
  const ClosedSystem fed = closure(d, Section::constant(d.interface, Point::vec({2.0})));
  CHECK(fed.step(2, Point::vec({1.0})).point().as_vec()[0] == doctest::Approx(3.0).epsilon(1e-14));

  const System two = two_position_system();
  const Section swap = Section::table(two.interface, {{lab(0), lab(1)}, {lab(1), lab(2)}});
  const ClosedSystem ct = closure(two, swap);
  for (int s = 0; s < 5; ++s) {
    int x = s;
    for (Tick t = 1; t <= 6; ++t) {
      x = (x + (x % 2 == 0 ? 1 : 2) + 1) % 5;
      CHECK(num(ct.step(t, lab(s)).point()) == x);
    }
  }
}

TEST_CASE("flow law") {
  const System c = examples::counter(6);
  TimePairs pairs;
  for (Tick s = 0; s <= 5; ++s)
    for (Tick t = 0; t <= 5; ++t) pairs.emplace_back(s, t);
  const LawReport r = check_flow(c, all_sections(c.interface), pairs, c.states.enumerate(), 0.0);
  CHECK(r.passed());
  CHECK(r.checked == 6 * 37);

  const System m = examples::markov_cell(examples::cell_matrix());
  const Dist two = closure(m, all_sections(m.interface).front()).step(2, lab(0));
  CHECK(std::abs(two.prob(lab(0)) - 0.83) <= 1e-12);
  CHECK(check_flow(m, all_sections(m.interface), time_pairs_upto(6), m.states.enumerate(), 1e-12).passed());

  const LawReport broken = check_flow(examples::clocked_counter(5), all_sections(Polynomial::y()),
                                      time_pairs_upto(4), Space::range(5).enumerate(), 0.0);
  CHECK_FALSE(broken.passed());
  REQUIRE_FALSE(broken.witnesses.empty());
  CHECK(broken.witnesses.front().where.find("s=") != std::string::npos);

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const System r5 = examples::random_finite(seed);
    const LawReport serial = check_flow(r5, all_sections(r5.interface), time_pairs_upto(6),
                                        r5.states.enumerate(), 0.0, Exec::Serial);
    const LawReport parallel = check_flow(r5, all_sections(r5.interface), time_pairs_upto(6),
                                          r5.states.enumerate(), 0.0, Exec::Parallel);
    CHECK(serial.passed());
    CHECK(serial.checked == parallel.checked);
  }
}

TEST_CASE("state laws follow matrix powers") {
  const System m = examples::markov_cell(examples::cell_matrix());
  const auto laws = state_laws(m, all_sections(m.interface).front(), Dist::dirac(lab(1)), 10);
  Eigen::RowVector2d row(0.0, 1.0);
  for (std::size_t t = 0; t < laws.size(); ++t) {
    CHECK(std::abs(laws[t].prob(lab(0)) - row(0)) <= 1e-12);
    CHECK(std::abs(laws[t].prob(lab(1)) - row(1)) <= 1e-12);
    row = row * examples::cell_matrix();
  }
  Rng a(4), b(4);
  const auto pa = simulate(m, all_sections(m.interface).front(), lab(0), 50, a);
  const auto pb = simulate(m, all_sections(m.interface).front(), lab(0), 50, b);
  CHECK(pa == pb);
}

TEST_CASE("reindexing") {
  const System two = two_position_system();
  const Polynomial q = Polynomial::monomial(Space::range(3), Space::range(2));
  const PolyMap phi = PolyMap::lens(two.interface, q, [](const Point& i) { return lab(num(i) + 1); },
                                    [](const Point& i, const Point& d) { return lab((num(i) + num(d)) % (2 + num(i))); });
  const PolyMap psi = PolyMap::lens(q, Polynomial::linear(Space::range(2)),
                                    [](const Point& j) { return lab(num(j) % 2); },
                                    [](const Point& j, const Point&) { return lab(num(j) % 2); });

  CHECK(compare_systems(reindex(PolyMap::identity(two.interface), two), two, ticks_upto(3)).passed());
  CHECK(compare_systems(reindex(compose_map(psi, phi), two), reindex(psi, reindex(phi, two)), ticks_upto(3))
            .passed());

  // closure of the reindexed system is the closure by the pulled-back section
  for (const auto& tau : all_sections(q)) {
    const ClosedSystem lhs = closure(reindex(phi, two), tau);
    const ClosedSystem rhs = closure(two, pull_section(phi, tau));
    for (const auto& s : two.states.enumerate())
      for (Tick t = 0; t <= 4; ++t) CHECK(lhs.step(t, s).point() == rhs.step(t, s).point());
  }

  // relabeling the outputs relabels the trajectory
  const System mach = machine({0, 1, 1}, {1, 2, 0});
  const Polynomial lin = Polynomial::linear(Space::finite({"a", "b"}));
  const PolyMap rel = PolyMap::lens(mach.interface, lin,
                                    [](const Point& i) { return Point::label(num(i) ? "b" : "a"); },
                                    [](const Point&, const Point&) { return Point::unit(); });
  const System relabeled = reindex(rel, mach);
  for (int s = 0; s < 3; ++s) CHECK(relabeled.output(1, lab(s)).as_label() == (s ? "b" : "a"));
  CHECK_THROWS_AS(reindex(psi, two), ShapeError);
}

TEST_CASE("vector fields") {
  const System d = examples::decay(1e-3);
  const ClosedSystem c = closure(d, all_sections(Polynomial::y()).front());
  const double at1 = c.step(1000, Point::vec({1.0})).point().as_vec()[0];
  CHECK(std::abs(at1 - std::exp(-1.0)) <= 1e-6);
  CHECK(std::abs(at1 - 0.367879) <= 1e-6);

  const System dr = examples::drift(1e-3);
  const ClosedSystem cd = closure(dr, Section::constant(dr.interface, Point::vec({2.0})));
  CHECK(cd.step(1000, Point::vec({0.0})).point().as_vec()[0] == doctest::Approx(2.0).epsilon(1e-12));

  // feedback through a position-dependent section: each step of size h holds
  // d = -x, so RK4 reduces to x |-> (1 - h) x
  const Section damp = Section{dr.interface, [](const Point& x) { return Point::vec({-x.as_vec()[0]}); }, "damp"};
  const ClosedSystem fb = closure(dr, damp);
  CHECK(std::abs(fb.step(1000, Point::vec({1.0})).point().as_vec()[0] - std::pow(1.0 - 1e-3, 1000)) <= 1e-12);
  CHECK(check_flow(dr, {damp}, time_pairs_upto(20), {Point::vec({0.3})}, 0.0).passed());

  TimePairs pairs;
  for (Tick s = 100; s <= 1000; s += 100)
    for (Tick t = 100; t <= 1000; t += 100) pairs.emplace_back(s, t);
  const LawReport r = check_flow(d, all_sections(Polynomial::y()), pairs, {Point::vec({1.0})}, 1e-6);
  CHECK(r.passed());
  CHECK(d.time.ticks(0.5) == 500u);
  CHECK_THROWS_AS(d.time.ticks(0.0005), ShapeError);

  // fourth-order convergence of the one-unit solution
  const double e1 = std::abs(rk4([](const Eigen::VectorXd& x, const Point&) -> Eigen::VectorXd { return -x; },
                                 Eigen::VectorXd::Ones(1), Point::unit(), 0.1, 10)(0) - std::exp(-1.0));
  const double e2 = std::abs(rk4([](const Eigen::VectorXd& x, const Point&) -> Eigen::VectorXd { return -x; },
                                 Eigen::VectorXd::Ones(1), Point::unit(), 0.05, 20)(0) - std::exp(-1.0));
  CHECK(e2 < e1 / 12.0);
}

TEST_CASE("tabulated coalgebra round trip") {
  const System c = examples::counter(6);
  CHECK(to_ncoalg(from_ncoalg(to_ncoalg(c))) == to_ncoalg(c));
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    const NCoalgebra n = to_ncoalg(examples::random_finite(seed));
    CHECK(to_ncoalg(from_ncoalg(n)) == n);
  }
  const NCoalgebra one = to_ncoalg(examples::counter(1));
  CHECK(one.update.size() == 1);
  CHECK(to_ncoalg(from_ncoalg(one)) == one);
  CHECK_THROWS_AS(to_ncoalg(examples::markov_cell(examples::cell_matrix())), UnsupportedError);
  CHECK_THROWS_AS(to_ncoalg(examples::decay(0.1)), UnsupportedError);
}

TEST_CASE("system morphisms") {
  const System three = machine({0, 1, 1}, {1, 0, 0});
  const System two = machine({0, 1}, {1, 0});
  const auto sections = all_sections(three.interface);
  const auto id = [](const Point& p) { return p; };
  CHECK(is_system_morphism(id, three, three, sections, ticks_upto(4), three.states.enumerate(), 0.0).passed());
  const auto quotient = [](const Point& p) { return lab(num(p) == 0 ? 0 : 1); };
  CHECK(is_system_morphism(quotient, three, two, sections, ticks_upto(4), three.states.enumerate(), 0.0).passed());
  const auto wrong = [](const Point& p) { return lab(num(p) == 2 ? 0 : 1); };
  CHECK_FALSE(is_system_morphism(wrong, three, two, sections, ticks_upto(4), three.states.enumerate(), 0.0).passed());
}
