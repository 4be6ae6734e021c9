#include "polydyn/poly.hpp"

#include <cmath>
#include <sstream>

#include "polydyn/error.hpp"

namespace polydyn {

Polynomial Polynomial::monomial(Space positions, Space dirs) {
  Polynomial p;
  p.positions_ = std::move(positions);
  p.dirs_ = std::move(dirs);
  return p;
}

Polynomial Polynomial::tabulated(Space positions, std::map<Point, Space> table) {
  if (!positions.is_finite())
    throw ShapeError("tabulated directions need finite positions, got " + positions.str());
  const auto pts = positions.enumerate();
  if (table.size() != pts.size())
    throw ShapeError("direction table does not cover the positions " + positions.str());
  for (const auto& i : pts)
    if (!table.count(i)) throw ShapeError("direction table misses position " + i.str());
  Polynomial p;
  p.positions_ = std::move(positions);
  p.dirs_ = std::move(table);
  return p;
}

const Space& Polynomial::constant_directions() const {
  if (!has_constant_directions()) throw ShapeError(str() + " has tabulated directions");
  return std::get<Space>(dirs_);
}

const std::map<Point, Space>& Polynomial::table() const {
  if (has_constant_directions()) throw ShapeError(str() + " has constant directions");
  return std::get<std::map<Point, Space>>(dirs_);
}

const Space& Polynomial::directions(const Point& i) const {
  if (has_constant_directions()) return std::get<Space>(dirs_);
  const auto& t = std::get<std::map<Point, Space>>(dirs_);
  auto it = t.find(i);
  if (it == t.end()) throw ShapeError(i.str() + " is not a position of " + str());
  return it->second;
}

bool Polynomial::is_y() const {
  return positions_.kind() == Space::Kind::Unit && has_constant_directions() &&
         constant_directions().kind() == Space::Kind::Unit;
}

std::string Polynomial::str() const {
  if (has_constant_directions()) return positions_.str() + " y^" + constant_directions().str();
  std::ostringstream os;
  os << "sum{";
  bool first = true;
  for (const auto& [i, s] : table()) {
    os << (first ? "" : ", ") << i.str() << ": y^" << s.str();
    first = false;
  }
  os << "}";
  return os.str();
}

bool operator==(const Polynomial& a, const Polynomial& b) {
  return a.positions_ == b.positions_ && a.dirs_ == b.dirs_;
}

Polynomial tensor(const Polynomial& p, const Polynomial& q) {
  Space pos = Space::pair(p.positions(), q.positions());
  if (p.has_constant_directions() && q.has_constant_directions())
    return Polynomial::monomial(std::move(pos),
                                Space::pair(p.constant_directions(), q.constant_directions()));
  if (!pos.is_finite())
    throw UnsupportedError("tensor of " + p.str() + " and " + q.str() +
                           " needs a direction family over infinite positions");
  std::map<Point, Space> table;
  for (const auto& ij : pos.enumerate())
    table.emplace(ij, Space::pair(p.directions(ij.at(0)), q.directions(ij.at(1))));
  return Polynomial::tabulated(std::move(pos), std::move(table));
}

Polynomial normalize(const Polynomial& p) {
  if (p.has_constant_directions())
    return Polynomial::monomial(normalize(p.positions()), normalize(p.constant_directions()));
  std::map<Point, Space> table;
  for (const auto& [i, s] : p.table())
    table.emplace(normalize_point(p.positions(), i), normalize(s));
  return Polynomial::tabulated(normalize(p.positions()), std::move(table));
}

PolyMap PolyMap::lens(Polynomial source, Polynomial target, Forward fwd, Get bwd) {
  PolyMap m;
  m.source = std::move(source);
  m.target = std::move(target);
  m.forward = std::move(fwd);
  m.backward = [bwd = std::move(bwd)](const Point& i, const Point& d) {
    return Dist::dirac(bwd(i, d));
  };
  m.effect = Effect::Deterministic;
  return m;
}

PolyMap PolyMap::stochastic(Polynomial source, Polynomial target, Forward fwd, Backward bwd) {
  return {std::move(source), std::move(target), std::move(fwd), std::move(bwd),
          Effect::Stochastic};
}

PolyMap PolyMap::identity(const Polynomial& p) {
  return lens(
      p, p, [](const Point& i) { return i; }, [](const Point&, const Point& d) { return d; });
}

Point PolyMap::back_point(const Point& i, const Point& d) const {
  Dist out = backward(i, d);
  if (!out.is_dirac())
    throw ShapeError("backward value " + out.str() + " at " + i.str() + " is not deterministic");
  return out.point();
}

PolyMap compose_map(const PolyMap& g, const PolyMap& f) {
  if (!(f.target == g.source))
    throw ShapeError("cannot compose: target " + f.target.str() + " differs from source " +
                     g.source.str());
  PolyMap m;
  m.source = f.source;
  m.target = g.target;
  m.effect = join(f.effect, g.effect);
  m.forward = [f, g](const Point& i) { return g.forward(f.forward(i)); };
  m.backward = [f, g](const Point& i, const Point& d2) {
    Dist mid = g.backward(f.forward(i), d2);
    if (mid.is_dirac()) return f.backward(i, mid.point());
    return kleisli_extend(Kernel::of([&f, &i](const Point& d1) { return f.backward(i, d1); }),
                          mid);
  };
  return m;
}

PolyMap tensor_map(const PolyMap& f, const PolyMap& g) {
  PolyMap m;
  m.source = tensor(f.source, g.source);
  m.target = tensor(f.target, g.target);
  m.effect = join(f.effect, g.effect);
  m.forward = [f, g](const Point& ij) {
    return Point::pair(f.forward(ij.at(0)), g.forward(ij.at(1)));
  };
  m.backward = [f, g](const Point& ij, const Point& d) {
    return dst(f.backward(ij.at(0), d.at(0)), g.backward(ij.at(1), d.at(1)));
  };
  return m;
}

PolyMap unitor_right(const Polynomial& p) {
  return PolyMap::lens(
      tensor(p, Polynomial::y()), p, [](const Point& i) { return i.at(0); },
      [](const Point&, const Point& d) { return Point::pair(d, Point::unit()); });
}

PolyMap unitor_left(const Polynomial& p) {
  return PolyMap::lens(
      tensor(Polynomial::y(), p), p, [](const Point& i) { return i.at(1); },
      [](const Point&, const Point& d) { return Point::pair(Point::unit(), d); });
}

PolyMap associator(const Polynomial& p, const Polynomial& q, const Polynomial& r) {
  return PolyMap::lens(
      tensor(tensor(p, q), r), tensor(p, tensor(q, r)),
      [](const Point& x) {
        return Point::pair(x.at(0).at(0), Point::pair(x.at(0).at(1), x.at(1)));
      },
      [](const Point&, const Point& d) {
        return Point::pair(Point::pair(d.at(0), d.at(1).at(0)), d.at(1).at(1));
      });
}

PolyMap braiding(const Polynomial& p, const Polynomial& q) {
  auto swap = [](const Point& x) { return Point::pair(x.at(1), x.at(0)); };
  return PolyMap::lens(tensor(p, q), tensor(q, p), swap,
                       [swap](const Point&, const Point& d) { return swap(d); });
}

Section Section::constant(const Polynomial& p, Point d) {
  if (p.has_constant_directions()) {
    if (!p.constant_directions().contains(d))
      throw ShapeError(d.str() + " is not a direction of " + p.str());
  } else {
    for (const auto& [i, s] : p.table())
      if (!s.contains(d)) throw ShapeError(d.str() + " is not a direction at " + i.str());
  }
  std::string name = "const " + d.str();
  return {p, [d = std::move(d)](const Point&) { return d; }, std::move(name)};
}

Section Section::table(const Polynomial& p, std::map<Point, Point> values, std::string name) {
  for (const auto& [i, d] : values)
    if (!p.directions(i).contains(d))
      throw ShapeError(d.str() + " is not a direction at " + i.str());
  if (name.empty()) {
    std::ostringstream os;
    os << "{";
    bool first = true;
    for (const auto& [i, d] : values) {
      os << (first ? "" : ", ") << i.str() << "->" << d.str();
      first = false;
    }
    os << "}";
    name = os.str();
  }
  return {p,
          [values = std::move(values)](const Point& i) {
            auto it = values.find(i);
            if (it == values.end()) throw ShapeError("section undefined at " + i.str());
            return it->second;
          },
          std::move(name)};
}

Section pull_section(const PolyMap& phi, const Section& tau) {
  if (phi.effect != Effect::Deterministic)
    throw ShapeError("sections pull back only along deterministic maps");
  if (!(tau.of == phi.target))
    throw ShapeError("section of " + tau.of.str() + " does not match " + phi.target.str());
  return {phi.source,
          [phi, tau](const Point& i) { return phi.back_point(i, tau(phi.forward(i))); },
          "pull(" + tau.name + ")"};
}

std::optional<std::uint64_t> section_count(const Polynomial& p) {
  auto npos = p.positions().cardinality();
  if (!npos) return std::nullopt;
  long double count = 1.0L;
  std::uint64_t exact = 1;
  for (const auto& i : p.positions().enumerate()) {
    auto n = p.directions(i).cardinality();
    if (!n) return std::nullopt;
    count *= static_cast<long double>(*n);
    if (count > 1.8e19L) return std::numeric_limits<std::uint64_t>::max();
    exact *= *n;
  }
  return exact;
}

std::vector<Section> all_sections(const Polynomial& p) {
  if (!section_count(p)) throw UnsupportedError("sections of " + p.str() + " are not enumerable");
  const auto positions = p.positions().enumerate();
  std::vector<std::vector<Point>> fibres;
  for (const auto& i : positions) fibres.push_back(p.directions(i).enumerate());
  std::vector<Section> out;
  for (const auto& f : fibres)
    if (f.empty()) return out;
  std::vector<std::size_t> idx(positions.size(), 0);
  while (true) {
    std::map<Point, Point> values;
    for (std::size_t k = 0; k < positions.size(); ++k) values.emplace(positions[k], fibres[k][idx[k]]);
    out.push_back(Section::table(p, std::move(values)));
    std::size_t k = positions.size();
    while (k > 0) {
      --k;
      if (++idx[k] < fibres[k].size()) break;
      idx[k] = 0;
      if (k == 0) return out;
    }
    if (positions.empty()) return out;
  }
}

Point random_point(const Space& s, Rng& rng) {
  switch (s.kind()) {
    case Space::Kind::Unit:
      return Point::unit();
    case Space::Kind::Finite: {
      if (s.labels().empty()) throw ShapeError("no points in the empty space");
      auto k = static_cast<std::size_t>(rng.uniform() * static_cast<double>(s.labels().size()));
      return s.at(std::min(k, s.labels().size() - 1));
    }
    case Space::Kind::Euclid: {
      Point::Vec v(s.dim());
      for (auto& x : v) x = rng.normal();
      return Point::vec(std::move(v));
    }
    case Space::Kind::Prod: {
      Point::Tuple t;
      for (const auto& f : s.factors()) t.push_back(random_point(f, rng));
      return Point::tuple(std::move(t));
    }
  }
  return Point::unit();
}

std::uint64_t point_hash(const Point& p) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : p.str()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<Section> generate_sections(const Polynomial& p, std::size_t limit,
                                       std::uint64_t seed) {
  auto count = section_count(p);
  if (count && *count <= limit) return all_sections(p);

  std::vector<Section> out;
  Rng rng(seed);
  // Constant sections exist when one direction space serves every position.
  if (p.has_constant_directions()) {
    const Space& dirs = p.constant_directions();
    if (auto n = dirs.cardinality(); n && *n <= limit / 2) {
      for (auto& d : dirs.enumerate()) out.push_back(Section::constant(p, std::move(d)));
    } else {
      for (std::size_t k = 0; k < limit / 2; ++k) {
        Rng r = rng.split(k);
        out.push_back(Section::constant(p, random_point(dirs, r)));
      }
    }
  }
  for (std::size_t k = out.size(); k < limit; ++k) {
    const std::uint64_t stream = Rng::mix(seed ^ (0x5eed0000ULL + k));
    out.push_back({p,
                   [p, stream](const Point& i) {
                     Rng r(stream ^ point_hash(i));
                     return random_point(p.directions(i), r);
                   },
                   "random#" + std::to_string(k)});
  }
  return out;
}

TimeMonoid TimeMonoid::real(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ShapeError("time step must be positive");
  return {Kind::RealNonNeg, h};
}

TimeMonoid::Tick TimeMonoid::ticks(double t) const {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ShapeError("times must be non-negative");
  const double unit = kind == Kind::DiscreteNat ? 1.0 : h;
  const double n = std::round(t / unit);
  if (std::abs(n * unit - t) > 1e-9 * std::max(1.0, std::abs(t)))
    throw ShapeError("time " + std::to_string(t) + " is not a multiple of " + std::to_string(unit));
  return static_cast<Tick>(n);
}

std::string TimeMonoid::str() const {
  if (kind == Kind::DiscreteNat) return "N";
  std::ostringstream os;
  os << "R+(h=" << h << ")";
  return os.str();
}

}  // namespace polydyn
