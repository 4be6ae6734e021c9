#include "polydyn/coalg.hpp"

#include <limits>
#include <memory>
#include <sstream>

#include "polydyn/error.hpp"

namespace polydyn {

namespace {

constexpr std::size_t kProbeStates = 4096;
constexpr std::size_t kProbeDirections = 64;

std::optional<Point> sole_position(const Polynomial& p) {
  auto n = p.positions().cardinality();
  if (n && *n == 1) return p.positions().enumerate().front();
  return std::nullopt;
}

// The sigma-closure's transition at tick k of a DiscreteMap system.
// The kernel refers to sys and sigma; callers keep both alive while it is used.
Kernel one_tick(const System& sys, const Section& sigma, Tick k) {
  Kernel c = Kernel::of([&sys, &sigma, k](const Point& x) {
    return sys.update(k, x, sigma(sys.output(k, x)));
  });
  if (sys.affine)
    if (auto i = sole_position(sys.interface)) c.affine = sys.affine(k, sigma(*i));
  return c;
}

Dist advance(const Kernel& k, const Dist& law) {
  return law.is_dirac() ? k(law.point()) : kleisli_extend(k, law);
}

std::string where(const Section& sigma, const Point& x, Tick s, Tick t, bool zero) {
  std::ostringstream os;
  os << "sigma=" << sigma.name << " x=" << x.str();
  if (zero) {
    os << " t=0";
  } else {
    os << " s=" << s << " t=" << t;
  }
  return os.str();
}

}  // namespace

System mk_system(Polynomial interface, Space states, System::Output output,
                 System::Update update, TimeMonoid time, Effect effect, Flavor flavor) {
  if (auto n = states.cardinality(); n && *n <= kProbeStates) {
    for (const auto& s : states.enumerate()) {
      const Point i = output(1, s);
      if (!interface.positions().contains(i))
        throw ShapeError("output " + i.str() + " at state " + s.str() + " is not a position of " +
                         interface.str());
      const Space& fibre = interface.directions(i);
      auto nd = fibre.cardinality();
      if (!nd || *nd > kProbeDirections) continue;
      for (const auto& d : fibre.enumerate()) {
        const Dist law = update(1, s, d);
        if (effect == Effect::Deterministic && !law.is_dirac())
          throw ShapeError("deterministic system has a non-Dirac update at " + s.str());
        if (law.is_gaussian()) throw ShapeError("Gaussian update on a finite state space");
        for (const auto& [x, w] : law.atoms())
          if (!states.contains(x))
            throw ShapeError("update leaves the state space: " + x.str() + " from " + s.str());
      }
    }
  }
  System sys;
  sys.interface = interface;
  sys.states = std::move(states);
  sys.time = time;
  sys.output = output;
  sys.update = [interface, output, update](Tick t, const Point& s, const Point& d) {
    const Point i = output(t, s);
    if (!interface.directions(i).contains(d))
      throw ShapeError("direction " + d.str() + " is not in the fibre over " + i.str() +
                       " of " + interface.str());
    return update(t, s, d);
  };
  sys.effect = effect;
  sys.flavor = flavor;
  return sys;
}

ClosedSystem closed_from_kernel(Space states, Kernel one) {
  ClosedSystem c;
  c.states = std::move(states);
  c.at = [one](Tick t) {
    Kernel k = Kernel::of([one, t](const Point& x) {
      Dist law = Dist::dirac(x);
      for (Tick n = 0; n < t; ++n) law = advance(one, law);
      return law;
    });
    if (one.affine) {
      const auto n = one.affine->A.cols();
      AffineGaussian acc{Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Zero(n),
                         Eigen::MatrixXd::Zero(n, n)};
      for (Tick m = 0; m < t; ++m)
        acc = {one.affine->A * acc.A, one.affine->A * acc.b + one.affine->b,
               one.affine->A * acc.noise * one.affine->A.transpose() + one.affine->noise};
      k.affine = acc;
    }
    return k;
  };
  return c;
}

ClosedSystem closed_from_map(Space states, std::function<Point(const Point&)> one) {
  ClosedSystem c;
  c.states = std::move(states);
  c.at = [one](Tick t) {
    return Kernel::of([one, t](const Point& x) {
      Point y = x;
      for (Tick n = 0; n < t; ++n) y = one(y);
      return Dist::dirac(std::move(y));
    });
  };
  return c;
}

ClosedSystem closure(const System& system, const Section& section) {
  ClosedSystem c;
  c.states = system.states;
  c.time = system.time;
  // Shared so that kernels handed out stay cheap to copy.
  auto sys = std::make_shared<const System>(system);
  auto sigma = std::make_shared<const Section>(section);
  if (sys->flavor == Flavor::DiscreteMap) {
    // Non-autonomous iterate c_t . ... . c_1 of the one-tick components.
    c.at = [sys, sigma](Tick t) {
      Kernel k = Kernel::of([sys, sigma, t](const Point& x) {
        Dist law = Dist::dirac(x);
        for (Tick n = 1; n <= t; ++n) law = advance(one_tick(*sys, *sigma, n), law);
        return law;
      });
      if (sys->affine && sole_position(sys->interface)) {
        std::optional<Kernel> acc;
        for (Tick n = 1; n <= t; ++n) {
          Kernel c1 = one_tick(*sys, *sigma, n);
          if (!c1.affine) {
            acc.reset();
            break;
          }
          acc = acc ? kleisli_compose(c1, *acc) : c1;
        }
        if (acc && acc->affine) k.affine = acc->affine;
      }
      return k;
    };
  } else if (sys->flavor == Flavor::VectorField) {
    // Zero-order hold over each integration step h: the section is read again
    // at every tick, so feedback through the output is seen by the integrator.
    c.at = [sys, sigma](Tick t) {
      return Kernel::of([sys, sigma, t](const Point& x) {
        Point y = x;
        for (Tick n = 0; n < t; ++n) y = sys->update(1, y, (*sigma)(sys->output(n, y))).point();
        return Dist::dirac(std::move(y));
      });
    };
  } else {
    c.at = [sys, sigma](Tick t) {
      Kernel k = Kernel::of([sys, sigma, t](const Point& x) {
        return sys->update(t, x, (*sigma)(sys->output(t, x)));
      });
      if (sys->affine)
        if (auto i = sole_position(sys->interface)) k.affine = sys->affine(t, (*sigma)(*i));
      return k;
    };
  }
  return c;
}

TimePairs time_pairs_upto(Tick n) {
  TimePairs out;
  for (Tick s = 0; s <= n; ++s)
    for (Tick t = 0; s + t <= n; ++t) out.emplace_back(s, t);
  return out;
}

LawReport check_closed_flow(const ClosedSystem& c, const TimePairs& times,
                            const std::vector<Point>& states, double tol) {
  LawReport r;
  r.law = "flow";
  const Kernel zero = c.at(0);
  for (const auto& x : states) {
    r.record(distance(zero(x), Dist::dirac(x)), tol, [&] { return "x=" + x.str() + " t=0"; });
    for (const auto& [s, t] : times) {
      const Dist lhs = c.step(s + t, x);
      const Dist rhs = kleisli_extend(c.at(s), c.step(t, x));
      r.record(distance(lhs, rhs), tol, [&, s = s, t = t] {
        return "x=" + x.str() + " s=" + std::to_string(s) + " t=" + std::to_string(t);
      });
    }
  }
  return r;
}

LawReport check_flow(const System& sys, const std::vector<Section>& sections,
                     const TimePairs& times, const std::vector<Point>& states, double tol,
                     Exec exec) {
  std::vector<ClosedSystem> closed;
  closed.reserve(sections.size());
  for (const auto& sigma : sections) closed.push_back(closure(sys, sigma));

  LawReport r;
  r.law = "flow";
  if (exec == Exec::Serial) {
    for (std::size_t k = 0; k < sections.size(); ++k) {
      LawReport part = check_closed_flow(closed[k], times, states, tol);
      for (auto& w : part.witnesses) w.where = "sigma=" + sections[k].name + " " + w.where;
      r.merge(part);
    }
    return r;
  }

  // Flattened (section, state, check) index; check 0 is the identity law.
  const std::size_t per_state = times.size() + 1;
  const std::size_t per_section = states.size() * per_state;
  std::vector<double> dev(sections.size() * per_section);
  for_each_index(dev.size(), Exec::Parallel, [&](std::size_t j) {
    const ClosedSystem& c = closed[j / per_section];
    const Point& x = states[(j % per_section) / per_state];
    const std::size_t m = j % per_state;
    if (m == 0) {
      dev[j] = distance(c.step(0, x), Dist::dirac(x));
    } else {
      const auto [s, t] = times[m - 1];
      dev[j] = distance(c.step(s + t, x), kleisli_extend(c.at(s), c.step(t, x)));
    }
  });
  for (std::size_t j = 0; j < dev.size(); ++j) {
    const std::size_t m = j % per_state;
    r.record(dev[j], tol, [&] {
      const auto& sigma = sections[j / per_section];
      const auto& x = states[(j % per_section) / per_state];
      return m == 0 ? where(sigma, x, 0, 0, true)
                    : where(sigma, x, times[m - 1].first, times[m - 1].second, false);
    });
  }
  return r;
}

System reindex(const PolyMap& phi, const System& sys) {
  if (!(phi.source == sys.interface))
    throw ShapeError("reindexing map from " + phi.source.str() + " does not start at " +
                     sys.interface.str());
  if (phi.effect == Effect::Stochastic && sys.effect == Effect::Deterministic)
    throw ShapeError("a deterministic system cannot be reindexed along a stochastic map");
  System out = sys;
  out.interface = phi.target;
  out.output = [phi, sys](Tick t, const Point& s) { return phi.forward(sys.output(t, s)); };
  out.update = [phi, sys](Tick t, const Point& s, const Point& d2) {
    const Dist d = phi.backward(sys.output(t, s), d2);
    if (d.is_dirac()) return sys.update(t, s, d.point());
    return kleisli_extend(
        Kernel::of([&sys, t, &s](const Point& d1) { return sys.update(t, s, d1); }), d);
  };
  out.effect = join(phi.effect, sys.effect);
  out.affine = nullptr;
  if (sys.affine) {
    if (auto i = sole_position(sys.interface)) {
      out.affine = [phi, sys, i = *i](Tick t, const Point& d2) -> std::optional<AffineGaussian> {
        const Dist d = phi.backward(i, d2);
        if (!d.is_dirac()) return std::nullopt;
        return sys.affine(t, d.point());
      };
    }
  }
  return out;
}

Eigen::VectorXd rk4(const Field& f, Eigen::VectorXd x, const Point& d, double h, Tick steps) {
  for (Tick n = 0; n < steps; ++n) {
    const Eigen::VectorXd k1 = f(x, d);
    const Eigen::VectorXd k2 = f(x + 0.5 * h * k1, d);
    const Eigen::VectorXd k3 = f(x + 0.5 * h * k2, d);
    const Eigen::VectorXd k4 = f(x + h * k3, d);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

System from_vector_field(Polynomial interface, std::size_t dim, Field f, Readout g, double h) {
  const TimeMonoid time = TimeMonoid::real(h);
  return mk_system(
      std::move(interface), Space::euclid(dim),
      [g](Tick, const Point& s) { return g(to_eigen(s.as_vec())); },
      [f, h](Tick t, const Point& s, const Point& d) {
        return Dist::dirac(Point::vec(to_vec(rk4(f, to_eigen(s.as_vec()), d, h, t))));
      },
      time, Effect::Deterministic, Flavor::VectorField);
}

NCoalgebra to_ncoalg(const System& sys) {
  if (sys.time.kind != TimeMonoid::Kind::DiscreteNat || sys.flavor != Flavor::DiscreteMap)
    throw UnsupportedError("tabulated coalgebras need discrete time");
  if (sys.effect != Effect::Deterministic)
    throw UnsupportedError("tabulated coalgebras need a deterministic system");
  if (!sys.states.is_finite()) throw UnsupportedError("tabulated coalgebras need finite states");
  NCoalgebra c;
  c.interface = sys.interface;
  c.states = sys.states;
  for (const auto& s : sys.states.enumerate()) {
    const Point i = sys.output(1, s);
    c.output.emplace(s, i);
    const Space& fibre = sys.interface.directions(i);
    if (!fibre.is_finite()) throw UnsupportedError("tabulated coalgebras need finite directions");
    for (const auto& d : fibre.enumerate()) {
      const Dist law = sys.update(1, s, d);
      if (!law.is_dirac()) throw UnsupportedError("non-Dirac update at " + s.str());
      c.update.emplace(std::make_pair(s, d), law.point());
    }
  }
  return c;
}

System from_ncoalg(const NCoalgebra& c) {
  return mk_system(
      c.interface, c.states,
      [out = c.output](Tick, const Point& s) {
        auto it = out.find(s);
        if (it == out.end()) throw ShapeError("no output at " + s.str());
        return it->second;
      },
      [upd = c.update](Tick, const Point& s, const Point& d) {
        auto it = upd.find({s, d});
        if (it == upd.end()) throw ShapeError("no update at " + s.str() + ", " + d.str());
        return Dist::dirac(it->second);
      });
}

LawReport is_system_morphism(const std::function<Point(const Point&)>& f, const System& a,
                             const System& b, const std::vector<Section>& sections,
                             const std::vector<Tick>& ticks, const std::vector<Point>& states,
                             double tol) {
  if (!(a.interface == b.interface) || !(a.time == b.time))
    throw ShapeError("system morphisms need a shared interface and time");
  LawReport r;
  r.law = "system morphism";
  const PointMap fm = PointMap::of(f);
  for (const auto& sigma : sections) {
    for (Tick t : ticks) {
      for (const auto& x : states) {
        const Point fx = f(x);
        const Point oa = a.output(t, x);
        const Point ob = b.output(t, fx);
        const double dev_out = distance(Dist::dirac(oa), Dist::dirac(ob));
        double dev_upd = std::numeric_limits<double>::infinity();
        if (dev_out <= tol) {
          const Point d = sigma(oa);
          dev_upd = distance(pushforward(fm, a.update(t, x, d)), b.update(t, fx, d));
        }
        r.record(std::max(dev_out, dev_upd), tol, [&] {
          return "sigma=" + sigma.name + " t=" + std::to_string(t) + " x=" + x.str();
        });
      }
    }
  }
  return r;
}

std::vector<Dist> state_laws(const System& sys, const Section& sigma, const Dist& init,
                             Tick horizon) {
  std::vector<Dist> out{init};
  if (sys.flavor == Flavor::DiscreteMap) {
    for (Tick k = 1; k <= horizon; ++k) out.push_back(advance(one_tick(sys, sigma, k), out.back()));
    return out;
  }
  const ClosedSystem c = closure(sys, sigma);
  if (sys.flavor == Flavor::VectorField) {
    const Kernel one = c.at(1);
    for (Tick k = 1; k <= horizon; ++k) out.push_back(advance(one, out.back()));
    return out;
  }
  for (Tick k = 1; k <= horizon; ++k) out.push_back(advance(c.at(k), init));
  return out;
}

std::vector<Point> simulate(const System& sys, const Section& sigma, const Point& x0,
                            Tick horizon, Rng& rng) {
  std::vector<Point> path{x0};
  const Kernel unit_step = sys.flavor == Flavor::DiscreteMap ? Kernel::unit() : closure(sys, sigma).at(1);
  for (Tick k = 1; k <= horizon; ++k) {
    const Dist law = sys.flavor == Flavor::DiscreteMap ? one_tick(sys, sigma, k)(path.back())
                                                       : unit_step(path.back());
    path.push_back(sample(law, rng));
  }
  return path;
}

}  // namespace polydyn
