#include "polydyn/hier.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>

#include "polydyn/error.hpp"

namespace polydyn {

namespace {

constexpr std::size_t kReachableStates = 4096;
constexpr std::size_t kTraceSections = 4096;
constexpr std::uint64_t kSectionSeed = 0xB15111ULL;

bool vector_like(const Space& s) {
  return s.kind() == Space::Kind::Euclid || s.kind() == Space::Kind::Unit;
}

std::size_t vdim(const Space& s) { return s.kind() == Space::Kind::Euclid ? s.dim() : 0; }

Point::Vec as_coords(const Point& p) { return p.is_unit() ? Point::Vec{} : p.as_vec(); }

Dist as_vector_law(const Dist& d) {
  if (d.is_dirac() && d.point().is_unit()) return Dist::dirac(Point::vec({}));
  return d;
}

GaussianLaw gaussian_form(const Dist& d) {
  if (d.is_gaussian()) return d.gaussian();
  if (d.is_dirac()) {
    Eigen::VectorXd m = to_eigen(d.point().as_vec());
    return {m, Eigen::MatrixXd::Zero(m.size(), m.size())};
  }
  throw UnsupportedError("mixture of a finite law and a Gaussian: " + d.str());
}

void require_same_time(const HierSystem& a, const HierSystem& b) {
  if (!(a.time == b.time))
    throw ShapeError("systems run on different clocks: " + a.time.str() + " and " + b.time.str());
}

std::vector<InitialLaw> canonical_candidates(const Space& states, bool all_diracs) {
  std::vector<InitialLaw> out;
  auto n = states.cardinality();
  if (!n) return out;
  if (all_diracs || *n <= kDiracCap)
    for (const auto& x : states.enumerate()) out.push_back({"dirac " + x.str(), Dist::dirac(x)});
  if (*n >= 2) out.push_back({"uniform", Dist::uniform(states)});
  return out;
}

}  // namespace

HierSystem lens_system(const PolyMap& f) {
  HierSystem h;
  h.source = f.source;
  h.target = f.target;
  h.states = Space::unit();
  h.emit = [f](Tick, const Point&) { return f; };
  h.absorb = [](Tick, const Point&, const Point&, const Point&) {
    return Dist::dirac(Point::unit());
  };
  h.initial = Dist::dirac(Point::unit());
  return h;
}

HierSystem id_hier(const Polynomial& p) { return lens_system(PolyMap::identity(p)); }

Space joint_space(const Space& a, const Space& b) {
  if (vector_like(a) && vector_like(b)) {
    if (a.kind() == Space::Kind::Unit && b.kind() == Space::Kind::Unit) return Space::unit();
    return Space::euclid(vdim(a) + vdim(b));
  }
  return Space::pair(a, b);
}

Point joint_point(const Space& a, const Space& b, const Point& x, const Point& y) {
  if (!(vector_like(a) && vector_like(b))) return Point::pair(x, y);
  if (a.kind() == Space::Kind::Unit && b.kind() == Space::Kind::Unit) return Point::unit();
  Point::Vec v = as_coords(x);
  const Point::Vec w = as_coords(y);
  v.insert(v.end(), w.begin(), w.end());
  return Point::vec(std::move(v));
}

std::pair<Point, Point> split_point(const Space& a, const Space& b, const Point& xy) {
  if (!(vector_like(a) && vector_like(b))) return {xy.at(0), xy.at(1)};
  if (a.kind() == Space::Kind::Unit && b.kind() == Space::Kind::Unit)
    return {Point::unit(), Point::unit()};
  const Point::Vec& v = xy.as_vec();
  const std::size_t na = vdim(a);
  if (v.size() != na + vdim(b)) throw ShapeError("joint state " + xy.str() + " has the wrong size");
  Point x = a.kind() == Space::Kind::Unit ? Point::unit()
                                          : Point::vec(Point::Vec(v.begin(), v.begin() + na));
  Point y = b.kind() == Space::Kind::Unit ? Point::unit()
                                          : Point::vec(Point::Vec(v.begin() + na, v.end()));
  return {std::move(x), std::move(y)};
}

Dist joint_law(const Space& a, const Space& b, const Dist& x, const Dist& y) {
  if (!(vector_like(a) && vector_like(b))) return dst(x, y);
  if (a.kind() == Space::Kind::Unit && b.kind() == Space::Kind::Unit)
    return Dist::dirac(Point::unit());
  const Dist vx = as_vector_law(x);
  const Dist vy = as_vector_law(y);
  if (vdim(a) == 0) return vy;
  if (vdim(b) == 0) return vx;
  if (vx.is_finite() && vy.is_finite()) {
    std::map<Point, double> w;
    for (const auto& [p, wp] : vx.atoms())
      for (const auto& [q, wq] : vy.atoms()) {
        Point::Vec v = p.as_vec();
        v.insert(v.end(), q.as_vec().begin(), q.as_vec().end());
        w[Point::vec(std::move(v))] += wp * wq;
      }
    return Dist::from_weights(std::move(w));
  }
  return dst(Dist::gaussian(gaussian_form(vx).mean, gaussian_form(vx).cov),
             Dist::gaussian(gaussian_form(vy).mean, gaussian_form(vy).cov));
}

HierSystem compose_hier(const HierSystem& beta, const HierSystem& gamma) {
  if (!(beta.target == gamma.source))
    throw ShapeError("cannot compose systems: " + beta.target.str() + " is not " +
                     gamma.source.str());
  require_same_time(beta, gamma);
  const Space xa = beta.states;
  const Space xb = gamma.states;
  auto pb = std::make_shared<const HierSystem>(beta);
  auto pg = std::make_shared<const HierSystem>(gamma);
  HierSystem h;
  h.source = beta.source;
  h.target = gamma.target;
  h.states = joint_space(xa, xb);
  h.time = beta.time;
  h.emit = [pb, pg, xa, xb](Tick t, const Point& xy) {
    const auto [x, y] = split_point(xa, xb, xy);
    return compose_map(pg->emit(t, y), pb->emit(t, x));
  };
  // An r-direction d'' at i goes to gamma as (f1(i), d'') and through g# to beta as (i, d').
  h.absorb = [pb, pg, xa, xb](Tick t, const Point& xy, const Point& i, const Point& d2) {
    const auto [x, y] = split_point(xa, xb, xy);
    const HierSystem& beta = *pb;
    const PolyMap f = beta.emit(t, x);
    const PolyMap g = pg->emit(t, y);
    const Point j = f.forward(i);
    const Dist next_y = pg->absorb(t, y, j, d2);
    const Dist d1 = g.backward(j, d2);
    const Dist next_x =
        d1.is_dirac()
            ? beta.absorb(t, x, i, d1.point())
            : kleisli_extend(Kernel::of([&beta, t, &x, &i](const Point& d) {
                               return beta.absorb(t, x, i, d);
                             }),
                             d1);
    return joint_law(xa, xb, next_x, next_y);
  };
  if (beta.initial && gamma.initial) h.initial = joint_law(xa, xb, *beta.initial, *gamma.initial);
  return h;
}

HierSystem tensor_hier(const HierSystem& beta, const HierSystem& beta2) {
  require_same_time(beta, beta2);
  const Space xa = beta.states;
  const Space xb = beta2.states;
  auto p1 = std::make_shared<const HierSystem>(beta);
  auto p2 = std::make_shared<const HierSystem>(beta2);
  HierSystem h;
  h.source = tensor(beta.source, beta2.source);
  h.target = tensor(beta.target, beta2.target);
  h.states = joint_space(xa, xb);
  h.time = beta.time;
  h.emit = [p1, p2, xa, xb](Tick t, const Point& xy) {
    const auto [x, y] = split_point(xa, xb, xy);
    return tensor_map(p1->emit(t, x), p2->emit(t, y));
  };
  h.absorb = [p1, p2, xa, xb](Tick t, const Point& xy, const Point& i, const Point& d) {
    const auto [x, y] = split_point(xa, xb, xy);
    return joint_law(xa, xb, p1->absorb(t, x, i.at(0), d.at(0)),
                     p2->absorb(t, y, i.at(1), d.at(1)));
  };
  if (beta.initial && beta2.initial) h.initial = joint_law(xa, xb, *beta.initial, *beta2.initial);
  return h;
}

HierSystem copy_system(const Space& a) {
  const Polynomial ay = Polynomial::linear(a);
  return lens_system(PolyMap::lens(
      ay, tensor(ay, ay), [](const Point& x) { return Point::pair(x, x); },
      [](const Point&, const Point&) { return Point::unit(); }));
}

HierSystem discard_system(const Space& a) {
  return lens_system(PolyMap::lens(
      Polynomial::linear(a), Polynomial::y(), [](const Point&) { return Point::unit(); },
      [](const Point&, const Point&) { return Point::unit(); }));
}

HierSystem from_monomial(const MonomialHier& m) {
  HierSystem h;
  h.source = Polynomial::monomial(m.a, m.s);
  h.target = Polynomial::monomial(m.b, m.t);
  h.states = m.states;
  h.time = m.time;
  h.emit = [m, src = h.source, tgt = h.target](Tick t, const Point& x) {
    return PolyMap::lens(
        src, tgt, [m, t, x](const Point& a) { return m.forward(t, x, a); },
        [m, t, x](const Point& a, const Point& d) { return m.backward(t, x, a, d); });
  };
  h.absorb = [m](Tick t, const Point& x, const Point& a, const Point& d) {
    return m.update(t, x, a, d);
  };
  h.initial = m.initial;
  return h;
}

MonomialHier to_monomial(const HierSystem& h) {
  if (!h.source.has_constant_directions() || !h.target.has_constant_directions())
    throw ShapeError("monomial presentation needs monomial interfaces");
  MonomialHier m;
  m.a = h.source.positions();
  m.s = h.source.constant_directions();
  m.b = h.target.positions();
  m.t = h.target.constant_directions();
  m.states = h.states;
  m.time = h.time;
  auto ph = std::make_shared<const HierSystem>(h);
  m.forward = [ph](Tick t, const Point& x, const Point& a) { return ph->emit(t, x).forward(a); };
  m.backward = [ph](Tick t, const Point& x, const Point& a, const Point& d) {
    return ph->emit(t, x).back_point(a, d);
  };
  m.update = [ph](Tick t, const Point& x, const Point& a, const Point& d) {
    return ph->absorb(t, x, a, d);
  };
  m.initial = h.initial;
  return m;
}

System as_system(const HierSystem& h) {
  if (!h.source.is_y()) throw ShapeError("only systems out of y close to systems, got " + h.source.str());
  auto ph = std::make_shared<const HierSystem>(h);
  System s;
  s.interface = h.target;
  s.states = h.states;
  s.time = h.time;
  s.output = [ph](Tick t, const Point& x) { return ph->emit(t, x).forward(Point::unit()); };
  s.update = [ph](Tick t, const Point& x, const Point& d) {
    return ph->absorb(t, x, Point::unit(), d);
  };
  s.effect = Effect::Stochastic;
  s.flavor = Flavor::DiscreteMap;
  return s;
}

Space hom_positions(const Polynomial& p, const Polynomial& q) {
  if (!p.positions().is_finite()) throw UnsupportedError("hom encoding needs finite positions");
  if (!q.has_constant_directions() || !q.constant_directions().is_finite())
    throw UnsupportedError("hom encoding needs a monomial target with finite directions");
  const auto ts = q.constant_directions().enumerate();
  std::vector<Space> per_position;
  for (const auto& i : p.positions().enumerate()) {
    std::vector<Space> back(ts.size(), p.directions(i));
    per_position.push_back(Space::pair(q.positions(), Space::prod(std::move(back))));
  }
  return Space::prod(std::move(per_position));
}

Point encode_map(const PolyMap& f) {
  const auto ts = f.target.constant_directions().enumerate();
  Point::Tuple out;
  for (const auto& i : f.source.positions().enumerate()) {
    Point::Tuple back;
    for (const auto& d : ts) back.push_back(f.back_point(i, d));
    out.push_back(Point::pair(f.forward(i), Point::tuple(std::move(back))));
  }
  return Point::tuple(std::move(out));
}

System hom_system(const HierSystem& h) {
  System s;
  s.interface = Polynomial::monomial(hom_positions(h.source, h.target),
                                     Space::pair(h.source.positions(),
                                                 h.target.constant_directions()));
  s.states = h.states;
  s.time = h.time;
  auto ph = std::make_shared<const HierSystem>(h);
  s.output = [ph](Tick t, const Point& x) { return encode_map(ph->emit(t, x)); };
  s.update = [ph](Tick t, const Point& x, const Point& d) {
    return ph->absorb(t, x, d.at(0), d.at(1));
  };
  s.effect = Effect::Stochastic;
  s.flavor = Flavor::DiscreteMap;
  return s;
}

Trace trace(const System& sys, const Section& sigma, const Dist& init, Tick horizon) {
  const auto laws = state_laws(sys, sigma, init, horizon);
  Trace tr;
  for (Tick t = 0; t <= horizon; ++t)
    tr.values.push_back(
        pushforward(PointMap::of([&sys, t](const Point& x) { return sys.output(t, x); }),
                    laws[t]));
  return tr;
}

Trace trace_mc(const System& sys, const Section& sigma, const Dist& init, Tick horizon,
               std::size_t samples, std::uint64_t seed, Exec exec) {
  if (samples == 0) throw ShapeError("Monte-Carlo traces need samples");
  std::vector<std::vector<Point>> positions(samples);
  const Rng root(seed);
  for_each_index(samples, exec, [&](std::size_t k) {
    Rng r = root.split(k);
    const Point x0 = sample(init, r);
    const auto path = simulate(sys, sigma, x0, horizon, r);
    auto& out = positions[k];
    for (Tick t = 0; t <= horizon; ++t) out.push_back(sys.output(t, path[t]));
  });
  Trace tr;
  const double w = 1.0 / static_cast<double>(samples);
  for (Tick t = 0; t <= horizon; ++t) {
    std::map<Point, double> counts;
    for (const auto& path : positions) counts[path[t]] += 1.0;
    for (auto& [p, c] : counts) c *= w;
    double total = 0.0;
    for (const auto& [p, c] : counts) total += c;
    counts.begin()->second += 1.0 - total;
    tr.values.push_back(Dist::from_weights(std::move(counts)));
  }
  return tr;
}

namespace {

// Traces of a finite discrete-time system for many initial laws. State laws are
// linear in the initial law, so each section's one-tick rows are built once and
// shared by every candidate.
class IndexedTracer {
 public:
  static constexpr std::size_t kMaxCells = std::size_t{1} << 22;  // sections * ticks * states

  static bool applies(const System& sys, std::size_t sections, Tick horizon) {
    if (sys.flavor == Flavor::VectorField) return false;
    const auto n = sys.states.cardinality();
    return n && *n * sections * (horizon + 1) <= kMaxCells;
  }

  IndexedTracer(const System& sys, const std::vector<Section>& sections, Tick horizon)
      : sys_(sys), sections_(sections), horizon_(horizon), states_(sys.states.enumerate()),
        rows_(sections.size()) {
    for (std::size_t k = 0; k < states_.size(); ++k) index_.emplace(states_[k], k);
    for (Tick t = 0; t <= horizon; ++t) {
      std::map<Point, std::size_t> ids;
      std::vector<std::size_t> out;
      for (const auto& x : states_) out.push_back(ids.emplace(sys.output(t, x), ids.size()).first->second);
      std::vector<Point> points(ids.size());
      for (auto& [p, id] : ids) points[id] = p;
      out_ids_.push_back(std::move(out));
      out_points_.push_back(std::move(points));
    }
  }

  // Empty when the law is not a finite law on the enumerated states.
  std::optional<Trace> trace(std::size_t s, const Dist& init) {
    if (!init.is_finite()) return std::nullopt;
    std::vector<double> v0(states_.size(), 0.0);
    for (const auto& [x, w] : init.atoms()) {
      auto it = index_.find(x);
      if (it == index_.end()) return std::nullopt;
      v0[it->second] += w;
    }
    const auto& rows = rows_for(s);
    const bool iterate = sys_.flavor == Flavor::DiscreteMap;
    Trace tr;
    std::vector<double> v = v0;
    for (Tick t = 0; t <= horizon_; ++t) {
      std::vector<double> mass(out_points_[t].size(), 0.0);
      for (std::size_t x = 0; x < v.size(); ++x)
        if (v[x] != 0.0) mass[out_ids_[t][x]] += v[x];
      std::map<Point, double> w;
      for (std::size_t k = 0; k < mass.size(); ++k)
        if (mass[k] != 0.0) w.emplace(out_points_[t][k], mass[k]);
      tr.values.push_back(Dist::from_weights(std::move(w)));
      if (t == horizon_) break;
      const std::vector<double>& from = iterate ? v : v0;
      std::vector<double> next(v.size(), 0.0);
      for (std::size_t x = 0; x < from.size(); ++x)
        if (from[x] != 0.0)
          for (const auto& [y, p] : rows[t][x]) next[y] += from[x] * p;
      v = std::move(next);
    }
    return tr;
  }

 private:
  using Row = std::vector<std::pair<std::size_t, double>>;

  // rows[k - 1][x] is the law of update(k, x, sigma(output(k, x))).
  const std::vector<std::vector<Row>>& rows_for(std::size_t s) {
    auto& slot = rows_[s];
    if (slot) return *slot;
    std::vector<std::vector<Row>> rows(horizon_);
    for (Tick k = 1; k <= horizon_; ++k) {
      auto& rk = rows[k - 1];
      rk.resize(states_.size());
      for (std::size_t x = 0; x < states_.size(); ++x) {
        const Point d = sections_[s](out_points_[k][out_ids_[k][x]]);
        for (const auto& [y, p] : sys_.update(k, states_[x], d).atoms()) {
          auto it = index_.find(y);
          if (it == index_.end()) throw ShapeError("update leaves the state space at " + y.str());
          rk[x].emplace_back(it->second, p);
        }
      }
    }
    slot = std::move(rows);
    return *slot;
  }

  const System& sys_;
  const std::vector<Section>& sections_;
  Tick horizon_;
  std::vector<Point> states_;
  std::map<Point, std::size_t> index_;
  std::vector<std::vector<std::size_t>> out_ids_;
  std::vector<std::vector<Point>> out_points_;
  std::vector<std::optional<std::vector<std::vector<Row>>>> rows_;  // per section, built on first use
};

}  // namespace

Verdict quasi_bisim(const System& a, const System& b, Quant qa, Quant qb,
                    const std::vector<Section>& sections, Tick horizon, double tol,
                    const std::vector<InitialLaw>& cand_a, const std::vector<InitialLaw>& cand_b,
                    Exec exec) {
  if (!(a.interface == b.interface) || !(a.time == b.time))
    throw ShapeError("quasi-bisimilarity compares systems on one interface and clock");
  if (sections.empty()) throw ShapeError("quasi-bisimilarity needs at least one section");

  auto candidates = [](const System& s, Quant q, const std::vector<InitialLaw>& given) {
    std::vector<InitialLaw> out;
    if (q == Quant::Exists) out = given;
    for (auto& c : canonical_candidates(s.states, q == Quant::ForAll)) out.push_back(std::move(c));
    if (out.empty()) out = given;
    if (out.empty()) throw ShapeError("no initial laws to compare on " + s.states.str());
    return out;
  };
  const auto ca = candidates(a, qa, cand_a);
  const auto cb = candidates(b, qb, cand_b);
  const std::size_t ns = sections.size();

  // Traces per candidate, computed on first use for all sections at once.
  using Traces = std::vector<std::optional<std::vector<Trace>>>;
  Traces ta(ca.size());
  Traces tb(cb.size());
  std::optional<IndexedTracer> ia, ib;
  if (IndexedTracer::applies(a, ns, horizon)) ia.emplace(a, sections, horizon);
  if (IndexedTracer::applies(b, ns, horizon)) ib.emplace(b, sections, horizon);
  auto traces_of = [&](Traces& cache, const System& sys, const std::vector<InitialLaw>& cands,
                       std::size_t c) -> const std::vector<Trace>& {
    if (!cache[c]) {
      std::optional<IndexedTracer>& fast = &cache == &ta ? ia : ib;
      std::vector<Trace> out(ns);
      for_each_index(ns, exec, [&](std::size_t s) {
        std::optional<Trace> tr;
        if (fast) tr = fast->trace(s, cands[c].law);
        out[s] = tr ? std::move(*tr) : trace(sys, sections[s], cands[c].law, horizon);
      });
      cache[c] = std::move(out);
    }
    return *cache[c];
  };

  // Deviation of a pair: max over sections and ticks; first breach in tick order.
  struct PairResult {
    double dev = 0.0;
    std::optional<BisimWitness> witness;
  };
  std::vector<std::vector<std::optional<PairResult>>> cache(
      ca.size(), std::vector<std::optional<PairResult>>(cb.size()));
  auto pair = [&](std::size_t i, std::size_t j) -> const PairResult& {
    auto& slot = cache[i][j];
    if (slot) return *slot;
    const auto& xa = traces_of(ta, a, ca, i);
    const auto& xb = traces_of(tb, b, cb, j);
    PairResult r;
    for (Tick t = 0; t <= horizon; ++t)
      for (std::size_t s = 0; s < ns; ++s) {
        const double d = distance(xa[s].values[t], xb[s].values[t]);
        if (d > r.dev || d != d) r.dev = d;
        if ((d > tol || d != d) && !r.witness) r.witness = BisimWitness{sections[s].name, t, d};
      }
    slot = r;
    return *slot;
  };

  Verdict v;
  auto report = [&](std::size_t i, std::size_t j, double dev) {
    v.deviation = dev;
    v.alpha = ca[i].name;
    v.beta = cb[j].name;
    v.witness = v.holds ? std::nullopt : pair(i, j).witness;
  };
  std::size_t checked = 0;
  auto dev = [&](std::size_t i, std::size_t j) {
    ++checked;
    return pair(i, j).dev;
  };
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // Outer quantifier over alpha, inner over beta; Exists takes a minimum, ForAll a maximum.
  std::size_t best_i = 0, best_j = 0;
  double outer = qa == Quant::Exists ? kInf : -kInf;
  for (std::size_t i = 0; i < ca.size(); ++i) {
    std::size_t arg_j = 0;
    double inner = qb == Quant::Exists ? kInf : -kInf;
    for (std::size_t j = 0; j < cb.size(); ++j) {
      const double d = dev(i, j);
      if (qb == Quant::Exists ? d < inner : d > inner) {
        inner = d;
        arg_j = j;
      }
      if (qb == Quant::Exists && inner <= tol) break;
      if (qb == Quant::ForAll && inner > tol) break;
    }
    if (qa == Quant::Exists ? inner < outer : inner > outer) {
      outer = inner;
      best_i = i;
      best_j = arg_j;
    }
    if (qa == Quant::Exists && outer <= tol) break;
    if (qa == Quant::ForAll && outer > tol) break;
  }
  v.holds = outer <= tol;
  v.pairs_checked = checked;
  report(best_i, best_j, outer);
  return v;
}

namespace {

// Sections of the hom polynomial, exhaustive on the positions the two systems emit.
std::vector<Section> reachable_sections(const System& a, const System& b, Tick horizon) {
  const System& hom = a;
  std::set<Point> reach;
  for (const System* h : {&a, &b}) {
    auto n = h->states.cardinality();
    if (!n || *n > kReachableStates) return generate_sections(hom.interface, 64, kSectionSeed);
    for (const auto& x : h->states.enumerate())
      for (Tick t = 0; t <= horizon; ++t) reach.insert(h->output(t, x));
  }
  const Space& dirs = hom.interface.constant_directions();
  const auto ds = dirs.enumerate();
  const std::vector<Point> rs(reach.begin(), reach.end());
  long double count = 1.0L;
  for (std::size_t k = 0; k < rs.size(); ++k) count *= static_cast<long double>(ds.size());

  std::vector<std::map<Point, Point>> tables;
  if (count <= static_cast<long double>(kTraceSections)) {
    std::vector<std::size_t> idx(rs.size(), 0);
    while (true) {
      std::map<Point, Point> tab;
      for (std::size_t k = 0; k < rs.size(); ++k) tab.emplace(rs[k], ds[idx[k]]);
      tables.push_back(std::move(tab));
      std::size_t k = rs.size();
      bool done = true;
      while (k > 0) {
        --k;
        if (++idx[k] < ds.size()) {
          done = false;
          break;
        }
        idx[k] = 0;
      }
      if (done) break;
    }
  } else {
    Rng rng(kSectionSeed);
    for (const auto& d : ds) {
      std::map<Point, Point> tab;
      for (const auto& r : rs) tab.emplace(r, d);
      tables.push_back(std::move(tab));
    }
    while (tables.size() < kTraceSections) {
      std::map<Point, Point> tab;
      for (const auto& r : rs) tab.emplace(r, random_point(dirs, rng));
      tables.push_back(std::move(tab));
    }
  }
  std::vector<Section> out;
  const Point fallback = ds.front();
  for (auto& tab : tables) {
    std::string name = "{";
    for (const auto& [p, d] : tab) name += (name.size() > 1 ? ", " : "") + d.str();
    name += "}";
    out.push_back({hom.interface,
                   [tab = std::move(tab), fallback](const Point& i) {
                     auto it = tab.find(i);
                     return it == tab.end() ? fallback : it->second;
                   },
                   std::move(name)});
  }
  return out;
}

// Hom systems are expensive to evaluate; on small finite instances their
// output and update are tabulated up to the horizon once.
System tabulate(const System& sys, Tick horizon, Exec exec) {
  constexpr std::size_t kMaxEntries = std::size_t{1} << 16;
  const auto n = sys.states.cardinality();
  const auto nd = sys.interface.constant_directions().cardinality();
  if (!n || !nd || *n * *nd * (horizon + 1) > kMaxEntries) return sys;
  const auto xs = sys.states.enumerate();
  const auto ds = sys.interface.constant_directions().enumerate();
  auto index = std::make_shared<std::map<Point, std::size_t>>();
  for (std::size_t k = 0; k < xs.size(); ++k) index->emplace(xs[k], k);
  auto dindex = std::make_shared<std::map<Point, std::size_t>>();
  for (std::size_t k = 0; k < ds.size(); ++k) dindex->emplace(ds[k], k);

  const std::size_t rows = (horizon + 1) * xs.size();
  auto outputs = std::make_shared<std::vector<Point>>(rows);
  auto updates = std::make_shared<std::vector<std::vector<Dist>>>(rows);
  for_each_index(rows, exec, [&](std::size_t r) {
    const Tick t = r / xs.size();
    const Point& x = xs[r % xs.size()];
    (*outputs)[r] = sys.output(t, x);
    auto& row = (*updates)[r];
    row.reserve(ds.size());
    for (const auto& d : ds) row.push_back(sys.update(t, x, d));
  });

  System out = sys;
  const std::size_t width = xs.size();
  auto orig = std::make_shared<const System>(sys);
  out.output = [orig, index, outputs, horizon, width](Tick t, const Point& x) {
    if (t > horizon) return orig->output(t, x);
    return (*outputs)[t * width + index->at(x)];
  };
  out.update = [orig, index, dindex, updates, horizon, width](Tick t, const Point& x,
                                                               const Point& d) {
    if (t > horizon) return orig->update(t, x, d);
    return (*updates)[t * width + index->at(x)][dindex->at(d)];
  };
  return out;
}

}  // namespace

Verdict quasi_bisim(const HierSystem& a, const HierSystem& b, Quant qa, Quant qb, Tick horizon,
                    double tol, const std::vector<InitialLaw>& cand_a,
                    const std::vector<InitialLaw>& cand_b, Exec exec) {
  if (!(a.source == b.source) || !(a.target == b.target))
    throw ShapeError("quasi-bisimilarity compares systems with one source and target");
  const System sa = tabulate(hom_system(a), horizon, exec);
  const System sb = tabulate(hom_system(b), horizon, exec);
  std::vector<InitialLaw> ia = cand_a;
  std::vector<InitialLaw> ib = cand_b;
  if (a.initial) ia.push_back({"initial", *a.initial});
  if (b.initial) ib.push_back({"initial", *b.initial});
  return quasi_bisim(sa, sb, qa, qb, reachable_sections(sa, sb, horizon), horizon, tol, ia, ib,
                     exec);
}

const Dist& FiniteChannel::operator()(const Point& p) const {
  auto it = rows.find(p);
  if (it == rows.end()) throw ShapeError("channel undefined at " + p.str());
  return it->second;
}

FiniteChannel FiniteChannel::from_matrix(const Space& x, const Space& y, const Eigen::MatrixXd& k) {
  const auto xs = x.enumerate();
  const auto ys = y.enumerate();
  if (k.rows() != static_cast<Eigen::Index>(xs.size()) ||
      k.cols() != static_cast<Eigen::Index>(ys.size()))
    throw ShapeError("channel matrix does not match its spaces");
  FiniteChannel c{x, y, {}};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::map<Point, double> w;
    for (std::size_t j = 0; j < ys.size(); ++j) w[ys[j]] = k(i, j);
    c.rows.emplace(xs[i], Dist::from_weights(std::move(w)));
  }
  return c;
}

BayesInversion exact_bayes(const FiniteChannel& c, const Dist& pi) {
  BayesInversion out;
  out.dagger.x = c.y;
  out.dagger.y = c.x;
  const auto xs = c.x.enumerate();
  for (const auto& y : c.y.enumerate()) {
    std::map<Point, double> joint;
    double evidence = 0.0;
    for (const auto& x : xs) {
      const double w = c(x).prob(y) * pi.prob(x);
      joint[x] = w;
      evidence += w;
    }
    if (evidence <= 0.0) {
      out.zero_evidence.push_back(y);
      out.dagger.rows.emplace(y, Dist::uniform(c.x));
      continue;
    }
    for (auto& [x, w] : joint) w /= evidence;
    double total = 0.0;
    for (const auto& [x, w] : joint) total += w;
    for (auto& [x, w] : joint)
      if (w > 0.0) {
        w += 1.0 - total;  // absorb rounding so the weights sum to one
        break;
      }
    out.dagger.rows.emplace(y, Dist::from_weights(std::move(joint)));
  }
  return out;
}

HierSystem channel_system(const FiniteChannel& c) {
  const auto xs = c.x.enumerate();
  std::map<Point, std::size_t> index;
  for (std::size_t k = 0; k < xs.size(); ++k) index.emplace(xs[k], k);
  const Space omega = Space::prod(std::vector<Space>(xs.size(), c.y));

  std::map<Point, double> w;
  for (const auto& o : omega.enumerate()) {
    double p = 1.0;
    for (std::size_t k = 0; k < xs.size() && p > 0.0; ++k) p *= c(xs[k]).prob(o.at(k));
    if (p > 0.0) w.emplace(o, p);
  }
  double total = 0.0;
  for (const auto& [o, p] : w) total += p;
  w.begin()->second += 1.0 - total;
  const Dist nu = Dist::from_weights(std::move(w));

  const Polynomial src = Polynomial::linear(c.x);
  const Polynomial tgt = Polynomial::linear(c.y);
  HierSystem h;
  h.source = src;
  h.target = tgt;
  h.states = omega;
  h.absorb = [nu](Tick, const Point&, const Point&, const Point&) { return nu; };
  h.initial = nu;
  auto keep = std::make_shared<std::map<Point, std::size_t>>(std::move(index));
  h.emit = [src, tgt, keep](Tick, const Point& o) {
    return PolyMap::lens(
        src, tgt, [o, keep](const Point& x) { return o.at(keep->at(x)); },
        [](const Point&, const Point&) { return Point::unit(); });
  };
  return h;
}

HierSystem prior_system(const Space& x, const Dist& pi) {
  return channel_system(FiniteChannel{Space::unit(), x, {{Point::unit(), pi}}});
}

BayesReport bayes_check(const HierSystem& c, const HierSystem& pi, const HierSystem& cdag,
                        Tick horizon, double tol) {
  const auto linear = [](const Polynomial& p) {
    return p.has_constant_directions() && p.constant_directions().kind() == Space::Kind::Unit;
  };
  if (!pi.source.is_y() || !linear(pi.target) || !linear(c.source) || !linear(c.target) ||
      !linear(cdag.source) || !linear(cdag.target))
    throw ShapeError("the Bayes check takes systems between linear interfaces");
  const Space x = pi.target.positions();
  const Space y = c.target.positions();
  if (!(c.source.positions() == x) || !(cdag.source.positions() == y) ||
      !(cdag.target.positions() == x))
    throw ShapeError("channel, prior and inversion do not line up");
  const Polynomial xy = Polynomial::linear(x);
  const Polynomial yy = Polynomial::linear(y);

  HierSystem left = compose_hier(compose_hier(pi, copy_system(x)), tensor_hier(id_hier(xy), c));
  HierSystem right = compose_hier(compose_hier(compose_hier(pi, c), copy_system(y)),
                                  tensor_hier(cdag, id_hier(yy)));
  Verdict v = quasi_bisim(left, right, Quant::Exists, Quant::Exists, horizon, tol);
  return {std::move(v), std::move(left), std::move(right)};
}

FiniteChannel perturbed(const FiniteChannel& c, double eps) {
  const auto ys = c.y.enumerate();
  if (ys.size() < 2) throw ShapeError("cannot perturb a channel into a single outcome");
  FiniteChannel out = c;
  auto& row = out.rows.begin()->second;
  std::map<Point, double> w;
  for (const auto& y : ys) w[y] = row.prob(y);
  std::size_t heavy = 0;
  for (std::size_t k = 1; k < ys.size(); ++k)
    if (w[ys[k]] > w[ys[heavy]]) heavy = k;
  if (w[ys[heavy]] < eps) throw ShapeError("perturbation larger than the heaviest atom");
  w[ys[heavy]] -= eps;
  w[ys[(heavy + 1) % ys.size()]] += eps;
  row = Dist::from_weights(std::move(w));
  return out;
}

std::vector<NamedVerdict> comonoid_laws(const Space& a, Tick horizon, double tol, Exec exec) {
  const Polynomial ay = Polynomial::linear(a);
  const HierSystem copy = copy_system(a);
  const HierSystem del = discard_system(a);
  const HierSystem id = id_hier(ay);
  const auto check = [&](const HierSystem& l, const HierSystem& r) {
    return quasi_bisim(l, r, Quant::ForAll, Quant::ForAll, horizon, tol, {}, {}, exec);
  };
  std::vector<NamedVerdict> out;
  out.push_back({"counit right",
                 check(compose_hier(compose_hier(copy, tensor_hier(id, del)), lens_system(unitor_right(ay))), id)});
  out.push_back({"counit left",
                 check(compose_hier(compose_hier(copy, tensor_hier(del, id)), lens_system(unitor_left(ay))), id)});
  out.push_back({"coassociativity",
                 check(compose_hier(compose_hier(copy, tensor_hier(copy, id)), lens_system(associator(ay, ay, ay))),
                       compose_hier(copy, tensor_hier(id, copy)))});
  out.push_back({"cocommutativity", check(compose_hier(copy, lens_system(braiding(ay, ay))), copy)});
  return out;
}

Space gaussian_state_space(std::size_t n) {
  return Space::pair(Space::euclid(n), Space::euclid(n * n));
}

Point encode_gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
  const auto n = mean.size();
  if (cov.rows() != n || cov.cols() != n) throw ShapeError("covariance does not match the mean");
  Point::Vec c(static_cast<std::size_t>(n * n));
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index k = 0; k < n; ++k) c[static_cast<std::size_t>(r * n + k)] = cov(r, k);
  return Point::pair(Point::vec(to_vec(mean)), Point::vec(std::move(c)));
}

GaussianLaw decode_gaussian(const Point& p) {
  const Eigen::VectorXd mean = to_eigen(p.at(0).as_vec());
  const auto n = mean.size();
  const auto& c = p.at(1).as_vec();
  if (c.size() != static_cast<std::size_t>(n * n)) throw ShapeError("malformed Gaussian state");
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index k = 0; k < n; ++k) cov(r, k) = c[static_cast<std::size_t>(r * n + k)];
  return {mean, cov};
}

PolyMap eta_lens(std::size_t b_dim, const Space& t) {
  const auto n = static_cast<Eigen::Index>(b_dim);
  return PolyMap::lens(
      Polynomial::monomial(Space::euclid(b_dim), t),
      Polynomial::monomial(gaussian_state_space(b_dim), t),
      [n](const Point& b) {
        return encode_gaussian(to_eigen(b.as_vec()), Eigen::MatrixXd::Zero(n, n));
      },
      [](const Point&, const Point& d) { return d; });
}

HierSystem hibi_compose(const HierSystem& f, const HierSystem& g) {
  const Polynomial& mid = f.target;
  if (!mid.has_constant_directions() || mid.positions().kind() != Space::Kind::Euclid)
    throw ShapeError("HiBi composition needs a Euclidean monomial in the middle, got " + mid.str());
  const PolyMap eta = eta_lens(mid.positions().dim(), mid.constant_directions());
  if (!(eta.target == g.source))
    throw ShapeError("HiBi composition: " + g.source.str() + " is not " + eta.target.str());
  HierSystem lifted = lens_system(eta);
  lifted.time = f.time;
  return compose_hier(compose_hier(f, lifted), g);
}

}  // namespace polydyn
