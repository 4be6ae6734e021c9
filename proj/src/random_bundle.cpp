#include "polydyn/random_bundle.hpp"

#include <cmath>

#include "polydyn/error.hpp"

namespace polydyn {

namespace {

void require(const LawReport& r, const std::string& what) {
  if (r.passed()) return;
  std::string msg = what + " fails " + r.law;
  if (!r.witnesses.empty()) msg += " at " + r.witnesses.front().where;
  throw LawViolation(msg);
}

std::vector<Section> checked_sections(const Polynomial& p) {
  return generate_sections(p, kSectionLimit, 0x5EC7105ULL);
}

std::vector<Point> finite_states(const Space& s) {
  if (!s.is_finite()) throw UnsupportedError("exact checks need a finite state space, got " + s.str());
  return s.enumerate();
}

}  // namespace

ProbabilitySpace ProbabilitySpace::make(Space space, Dist measure) {
  if (!space.is_finite()) throw ShapeError("probability spaces here are finite");
  if (!measure.is_finite()) throw ShapeError("the measure must have finite support");
  for (const auto& [x, w] : measure.atoms())
    if (!space.contains(x)) throw ShapeError("measure charges " + x.str() + " outside the space");
  return {std::move(space), std::move(measure)};
}

MeasurePreservingSystem measure_system(ProbabilitySpace base, StateMap one_tick) {
  ClosedSystem flow = closed_from_map(base.space, std::move(one_tick));
  return {std::move(base), std::move(flow)};
}

std::vector<Tick> ticks_upto(Tick n) {
  std::vector<Tick> out;
  for (Tick t = 0; t <= n; ++t) out.push_back(t);
  return out;
}

LawReport check_measure_preserving(const MeasurePreservingSystem& mp,
                                   const std::vector<Tick>& generators, double tol) {
  LawReport r;
  r.law = "measure preservation";
  for (Tick t : generators) {
    const Dist image = kleisli_extend(mp.flow.at(t), mp.base.measure);
    r.record(distance(image, mp.base.measure), tol, [&] { return "t=" + std::to_string(t); });
  }
  return r;
}

LawReport check_base_morphism(const StateMap& psi, const MeasurePreservingSystem& from,
                              const MeasurePreservingSystem& to, const std::vector<Tick>& ticks,
                              double tol) {
  LawReport r;
  r.law = "base morphism";
  const PointMap pm = PointMap::of(psi);
  r.record(distance(pushforward(pm, from.base.measure), to.base.measure), tol, "measure");
  for (Tick t : ticks) {
    for (const auto& w : finite_states(from.base.space)) {
      const Dist lhs = pushforward(pm, from.flow.step(t, w));
      const Dist rhs = to.flow.step(t, psi(w));
      r.record(distance(lhs, rhs), tol,
               [&] { return "t=" + std::to_string(t) + " w=" + w.str(); });
    }
  }
  return r;
}

LawReport check_random_system(const RandomSystem& rds, const std::vector<Section>& sections,
                              const std::vector<Tick>& ticks, double tol) {
  LawReport r;
  r.law = "random system square";
  const PointMap proj = PointMap::of(rds.proj);
  const auto states = finite_states(rds.sys.states);
  for (const auto& sigma : sections) {
    const ClosedSystem c = closure(rds.sys, sigma);
    for (Tick t : ticks) {
      const Kernel k = c.at(t);
      const Kernel b = rds.base.flow.at(t);
      for (const auto& s : states) {
        const Dist lhs = pushforward(proj, k(s));
        const Dist rhs = b(rds.proj(s));
        r.record(distance(lhs, rhs), tol, [&] {
          return "sigma=" + sigma.name + " t=" + std::to_string(t) + " s=" + s.str();
        });
      }
    }
  }
  return r;
}

RandomSystem make_random_system(MeasurePreservingSystem base, System sys, StateMap proj,
                                const std::vector<Tick>& ticks) {
  if (sys.effect != Effect::Deterministic)
    throw ShapeError("random systems take a deterministic update");
  require(check_measure_preserving(base, ticks), "base flow");
  for (const auto& s : finite_states(sys.states))
    if (!base.base.space.contains(proj(s)))
      throw ShapeError("projection of " + s.str() + " leaves the base space");
  RandomSystem rds{std::move(base), std::move(sys), std::move(proj)};
  require(check_random_system(rds, checked_sections(rds.sys.interface), ticks), "random system");
  return rds;
}

RandomSystem reindex_rds(const PolyMap& phi, const RandomSystem& rds,
                         const std::vector<Tick>& ticks) {
  return make_random_system(rds.base, reindex(phi, rds.sys), rds.proj, ticks);
}

RandomSystem rebase_rds(const StateMap& psi, const MeasurePreservingSystem& target,
                        const RandomSystem& rds, const std::vector<Tick>& ticks) {
  require(check_base_morphism(psi, rds.base, target, ticks), "rebasing map");
  StateMap proj = [psi, p = rds.proj](const Point& s) { return psi(p(s)); };
  return make_random_system(target, rds.sys, std::move(proj), ticks);
}

LawReport check_bundle(const BundleSystem& bs, const std::vector<Section>& sections_p,
                       const std::vector<Section>& sections_b, const std::vector<Tick>& ticks,
                       double tol) {
  if (!(bs.base.time == bs.total.time)) throw ShapeError("bundle levels run on different clocks");
  LawReport r;
  r.law = "bundle square";
  const PointMap proj = PointMap::of(bs.proj);
  const auto states = finite_states(bs.total.states);
  std::vector<ClosedSystem> base_closed;
  for (const auto& vs : sections_b) base_closed.push_back(closure(bs.base, vs));
  for (const auto& sigma : sections_p) {
    const ClosedSystem c = closure(bs.total, sigma);
    for (Tick t : ticks) {
      const Kernel k = c.at(t);
      std::vector<Dist> lhs;
      lhs.reserve(states.size());
      for (const auto& w : states) lhs.push_back(pushforward(proj, k(w)));
      for (std::size_t b = 0; b < sections_b.size(); ++b) {
        const Kernel kb = base_closed[b].at(t);
        for (std::size_t n = 0; n < states.size(); ++n) {
          r.record(distance(lhs[n], kb(bs.proj(states[n]))), tol, [&] {
            return "sigma=" + sigma.name + " varsigma=" + sections_b[b].name +
                   " t=" + std::to_string(t) + " w=" + states[n].str();
          });
        }
      }
    }
  }
  return r;
}

BundleSystem make_bundle(System base, System total, StateMap proj,
                         const std::vector<Tick>& ticks) {
  for (const auto& w : finite_states(total.states))
    if (!base.states.contains(proj(w)))
      throw ShapeError("projection of " + w.str() + " leaves the base states");
  BundleSystem bs{std::move(base), std::move(total), std::move(proj)};
  require(check_bundle(bs, checked_sections(bs.total.interface),
                       checked_sections(bs.base.interface), ticks),
          "bundle");
  return bs;
}

BundleSystem reindex_bundle(const PolyMap& phi, const BundleSystem& bs,
                            const std::vector<Tick>& ticks) {
  return make_bundle(bs.base, reindex(phi, bs.total), bs.proj, ticks);
}

BundleSystem rebase_bundle(const StateMap& phi, const System& target, const BundleSystem& bs,
                           const std::vector<Tick>& ticks) {
  require(is_system_morphism(phi, bs.base, target, checked_sections(bs.base.interface), ticks,
                             finite_states(bs.base.states), 0.0),
          "rebasing map");
  StateMap proj = [phi, p = bs.proj](const Point& w) { return phi(p(w)); };
  return make_bundle(target, bs.total, std::move(proj), ticks);
}

LawReport compare_systems(const System& a, const System& b, const std::vector<Tick>& ticks,
                          double tol) {
  if (!(a.states == b.states) || !(a.interface == b.interface))
    throw ShapeError("compared systems differ in states or interface");
  LawReport r;
  r.law = "system equality";
  for (Tick t : ticks) {
    for (const auto& s : finite_states(a.states)) {
      const Point oa = a.output(t, s);
      const Point ob = b.output(t, s);
      if (!(oa == ob)) {
        r.record(std::numeric_limits<double>::infinity(), tol,
                 [&] { return "output t=" + std::to_string(t) + " s=" + s.str(); });
        continue;
      }
      for (const auto& d : a.interface.directions(oa).enumerate()) {
        r.record(distance(a.update(t, s, d), b.update(t, s, d)), tol, [&] {
          return "update t=" + std::to_string(t) + " s=" + s.str() + " d=" + d.str();
        });
      }
    }
  }
  return r;
}

std::vector<double> ou_path(double theta, double sigma, double h, std::size_t steps,
                            std::uint64_t seed, double x0) {
  Rng rng(seed);
  std::vector<double> x(steps + 1);
  x[0] = x0;
  const double sq = std::sqrt(h);
  for (std::size_t k = 0; k < steps; ++k)
    x[k + 1] = x[k] - theta * x[k] * h + sigma * sq * rng.normal();
  return x;
}

}  // namespace polydyn
