#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "polydyn/dist.hpp"
#include "polydyn/exec.hpp"
#include "polydyn/poly.hpp"
#include "polydyn/report.hpp"

namespace polydyn {

using Tick = TimeMonoid::Tick;

enum class Flavor {
  DiscreteMap,  // update(t, s, d) is the one-tick transition at tick t
  VectorField,  // update(t, s, d) integrates a field for t ticks with d held fixed;
                // closures read the section again at every tick
  ExactFamily,  // update(t, s, d) is a user-supplied exact t-tick law
};

/// Open system over an interface p: output beta^o(t, s) in p(1) and update
/// beta^u(t, s, d) for d in p[beta^o(t, s)].
struct System {
  using Output = std::function<Point(Tick, const Point&)>;
  using Update = std::function<Dist(Tick, const Point&, const Point&)>;
  // Affine-Gaussian form of s |-> update(t, s, d), when there is one.
  using AffineForm = std::function<std::optional<AffineGaussian>(Tick, const Point&)>;

  Polynomial interface;
  Space states;
  TimeMonoid time;
  Output output;
  Update update;
  Effect effect = Effect::Deterministic;
  Flavor flavor = Flavor::DiscreteMap;
  AffineForm affine;
};

// Wraps update with a direction check and, on finite state spaces, probes
// output and update at t = 1. Does not check the flow law.
System mk_system(Polynomial interface, Space states, System::Output output,
                 System::Update update, TimeMonoid time = TimeMonoid::discrete(),
                 Effect effect = Effect::Deterministic, Flavor flavor = Flavor::DiscreteMap);

/// Closed system: an action of time on states by Markov kernels.
struct ClosedSystem {
  Space states;
  TimeMonoid time;
  std::function<Kernel(Tick)> at;

  Dist step(Tick t, const Point& s) const { return at(t)(s); }
};

// Iterates a one-tick kernel; the affine tag, if any, is composed along.
ClosedSystem closed_from_kernel(Space states, Kernel one_tick);
ClosedSystem closed_from_map(Space states, std::function<Point(const Point&)> one_tick);

ClosedSystem closure(const System& sys, const Section& sigma);

using TimePairs = std::vector<std::pair<Tick, Tick>>;
// All (s, t) with s + t <= n.
TimePairs time_pairs_upto(Tick n);

// step(0) = Dirac and step(s + t) = step(s) after step(t) on the given states.
LawReport check_closed_flow(const ClosedSystem& c, const TimePairs& times,
                            const std::vector<Point>& states, double tol);
LawReport check_flow(const System& sys, const std::vector<Section>& sections,
                     const TimePairs& times, const std::vector<Point>& states, double tol,
                     Exec exec = Exec::Parallel);

// Output phi1 . beta^o, update beta^u after phi#.
System reindex(const PolyMap& phi, const System& sys);

using Field = std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Point&)>;
using Readout = std::function<Point(const Eigen::VectorXd&)>;

Eigen::VectorXd rk4(const Field& f, Eigen::VectorXd x, const Point& d, double h, Tick steps);
// States Euclid(dim), time R+(h), RK4 with input held over each update call.
System from_vector_field(Polynomial interface, std::size_t dim, Field f, Readout g, double h);

/// Tabulated presentation: beta^o : S -> p(1) and beta^u : sum_s p[beta^o(s)] -> S.
struct NCoalgebra {
  Polynomial interface;
  Space states;
  std::map<Point, Point> output;
  std::map<std::pair<Point, Point>, Point> update;

  friend bool operator==(const NCoalgebra& a, const NCoalgebra& b) {
    return a.interface == b.interface && a.states == b.states && a.output == b.output &&
           a.update == b.update;
  }
};

// Finite, discrete-time, deterministic systems only.
NCoalgebra to_ncoalg(const System& sys);
System from_ncoalg(const NCoalgebra& c);

// Output and update squares for f : X -> Y at each (section, tick, state).
LawReport is_system_morphism(const std::function<Point(const Point&)>& f, const System& a,
                             const System& b, const std::vector<Section>& sections,
                             const std::vector<Tick>& ticks, const std::vector<Point>& states,
                             double tol);

// Exact state laws at ticks 0..horizon under the sigma-closure.
std::vector<Dist> state_laws(const System& sys, const Section& sigma, const Dist& init,
                             Tick horizon);
// One sampled path x_0..x_horizon.
std::vector<Point> simulate(const System& sys, const Section& sigma, const Point& x0,
                            Tick horizon, Rng& rng);

}  // namespace polydyn
