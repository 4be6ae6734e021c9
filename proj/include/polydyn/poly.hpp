#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "polydyn/dist.hpp"
#include "polydyn/space.hpp"

namespace polydyn {

/// Sum of representables: a positions space p(1) and a direction space p[i]
/// for every position, either constant or tabulated over finite positions.
class Polynomial {
 public:
  Polynomial() = default;  // y

  static Polynomial monomial(Space positions, Space dirs);
  static Polynomial y() { return Polynomial(); }
  static Polynomial linear(Space positions) { return monomial(std::move(positions), Space::unit()); }
  // Positions must be finite and the table total.
  static Polynomial tabulated(Space positions, std::map<Point, Space> table);

  const Space& positions() const { return positions_; }
  bool has_constant_directions() const { return std::holds_alternative<Space>(dirs_); }
  const Space& constant_directions() const;
  const std::map<Point, Space>& table() const;
  // p[i]
  const Space& directions(const Point& i) const;

  bool is_y() const;
  std::string str() const;

  friend bool operator==(const Polynomial& a, const Polynomial& b);

 private:
  Space positions_;
  std::variant<Space, std::map<Point, Space>> dirs_;
};

Polynomial tensor(const Polynomial& p, const Polynomial& q);
// Positions and directions flattened with normalize(); tensor(p, y) normalizes to p.
Polynomial normalize(const Polynomial& p);

enum class Effect { Deterministic, Stochastic };

inline Effect join(Effect a, Effect b) {
  return a == Effect::Deterministic && b == Effect::Deterministic ? Effect::Deterministic
                                                                   : Effect::Stochastic;
}

/// Morphism of polynomials with backward effects in the probability monad:
/// forward f1 : p(1) -> q(1), backward f#(i, d') a law on p[i] for d' in q[f1(i)].
struct PolyMap {
  using Forward = std::function<Point(const Point&)>;
  using Backward = std::function<Dist(const Point&, const Point&)>;
  using Get = std::function<Point(const Point&, const Point&)>;

  Polynomial source;
  Polynomial target;
  Forward forward;
  Backward backward;
  Effect effect = Effect::Deterministic;

  // Deterministic lens from a point-valued backward map.
  static PolyMap lens(Polynomial source, Polynomial target, Forward fwd, Get bwd);
  static PolyMap stochastic(Polynomial source, Polynomial target, Forward fwd, Backward bwd);
  static PolyMap identity(const Polynomial& p);

  Point fwd(const Point& i) const { return forward(i); }
  Dist back(const Point& i, const Point& d) const { return backward(i, d); }
  // Payload of a Dirac backward value; throws ShapeError otherwise.
  Point back_point(const Point& i, const Point& d) const;
};

// g after f. Throws ShapeError if target(f) != source(g).
PolyMap compose_map(const PolyMap& g, const PolyMap& f);
PolyMap tensor_map(const PolyMap& f, const PolyMap& g);

// Structural isomorphisms of the monoidal structure (tensor, y).
PolyMap unitor_right(const Polynomial& p);  // p (x) y -> p
PolyMap unitor_left(const Polynomial& p);   // y (x) p -> p
PolyMap associator(const Polynomial& p, const Polynomial& q, const Polynomial& r);
PolyMap braiding(const Polynomial& p, const Polynomial& q);  // p (x) q -> q (x) p

/// A global section: a direction at every position.
struct Section {
  Polynomial of;
  std::function<Point(const Point&)> assign;
  std::string name;

  Point operator()(const Point& i) const { return assign(i); }

  static Section constant(const Polynomial& p, Point d);
  static Section table(const Polynomial& p, std::map<Point, Point> values, std::string name = "");
};

// pull_section(phi, tau)(i) = phi#(i, tau(phi1(i))). Requires a deterministic phi.
Section pull_section(const PolyMap& phi, const Section& tau);

// Number of sections when positions and all fibres are finite.
std::optional<std::uint64_t> section_count(const Polynomial& p);
// Every section, for finite positions and fibres.
std::vector<Section> all_sections(const Polynomial& p);
// All sections when there are at most `limit`; otherwise the constant sections
// available plus seeded pseudo-random ones. Euclidean fibres are sampled.
std::vector<Section> generate_sections(const Polynomial& p, std::size_t limit, std::uint64_t seed);

// Uniform label per finite factor, standard normal coordinates per Euclidean factor.
Point random_point(const Space& s, Rng& rng);
// FNV-1a of the canonical text form; stable across platforms.
std::uint64_t point_hash(const Point& p);

/// Time as a count of ticks: natural numbers, or multiples of a step h.
struct TimeMonoid {
  enum class Kind { DiscreteNat, RealNonNeg };
  using Tick = std::uint64_t;

  Kind kind = Kind::DiscreteNat;
  double h = 1.0;

  static TimeMonoid discrete() { return {}; }
  static TimeMonoid real(double h);

  // Ticks for a real time; throws ShapeError unless t is a multiple of h.
  Tick ticks(double t) const;
  double real_time(Tick n) const { return kind == Kind::DiscreteNat ? double(n) : double(n) * h; }
  std::string str() const;

  friend bool operator==(const TimeMonoid& a, const TimeMonoid& b) {
    return a.kind == b.kind && (a.kind == Kind::DiscreteNat || a.h == b.h);
  }
};

}  // namespace polydyn
