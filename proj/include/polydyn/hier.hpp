#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polydyn/coalg.hpp"

namespace polydyn {

/// A system p -> q that emits a polynomial morphism at every tick and absorbs
/// directions of the emitted map: absorb(t, x, i, d') with d' in q[f1(i)].
struct HierSystem {
  using Emit = std::function<PolyMap(Tick, const Point&)>;
  using Absorb = std::function<Dist(Tick, const Point&, const Point&, const Point&)>;

  Polynomial source;
  Polynomial target;
  Space states;
  TimeMonoid time;
  Emit emit;
  Absorb absorb;
  std::optional<Dist> initial;
};

// Stateless system constantly emitting f.
HierSystem lens_system(const PolyMap& f);
HierSystem id_hier(const Polynomial& p);

// States of composites pair the component states. When both are Euclidean
// (or trivial) the pair is flattened to one Euclidean space so that Gaussian
// laws stay closed under the independent product.
Space joint_space(const Space& a, const Space& b);
Point joint_point(const Space& a, const Space& b, const Point& x, const Point& y);
std::pair<Point, Point> split_point(const Space& a, const Space& b, const Point& xy);
Dist joint_law(const Space& a, const Space& b, const Dist& x, const Dist& y);

HierSystem compose_hier(const HierSystem& beta, const HierSystem& gamma);
HierSystem tensor_hier(const HierSystem& beta, const HierSystem& beta2);

// Ay -> Ay (x) Ay emitting a |-> (a, a), and Ay -> y.
HierSystem copy_system(const Space& a);
HierSystem discard_system(const Space& a);

/// Presentation of a system Ay^S -> By^T by its three component maps.
struct MonomialHier {
  Space a, s, b, t;
  Space states;
  TimeMonoid time;
  std::function<Point(Tick, const Point& x, const Point& a)> forward;
  std::function<Point(Tick, const Point& x, const Point& a, const Point& t)> backward;
  std::function<Dist(Tick, const Point& x, const Point& a, const Point& t)> update;
  std::optional<Dist> initial;
};

HierSystem from_monomial(const MonomialHier& m);
// Needs monomial source and target and deterministic emitted backward maps.
MonomialHier to_monomial(const HierSystem& h);

// A system y -> q read as a system over q.
System as_system(const HierSystem& h);

// Positions of [p, q] reachable as emitted maps, encoded as points: for every
// i in p(1) the pair (f1(i), (f#(i, d'))_{d' in T}). Needs finite p(1), a
// monomial q = B y^T with finite T, and deterministic backward maps.
Space hom_positions(const Polynomial& p, const Polynomial& q);
Point encode_map(const PolyMap& f);
// The system over the encoded hom polynomial with directions p(1) x T.
System hom_system(const HierSystem& h);

struct Trace {
  std::vector<Dist> values;  // law of positions at ticks 0..horizon
};

Trace trace(const System& sys, const Section& sigma, const Dist& init, Tick horizon);
// Empirical position laws from sampled paths.
Trace trace_mc(const System& sys, const Section& sigma, const Dist& init, Tick horizon,
               std::size_t samples, std::uint64_t seed, Exec exec = Exec::Parallel);

enum class Quant { Exists, ForAll };

struct InitialLaw {
  std::string name;
  Dist law;
};

struct BisimWitness {
  std::string section;
  Tick t = 0;
  double deviation = 0.0;
};

struct Verdict {
  bool holds = false;
  double deviation = 0.0;  // of the best pair
  std::string alpha, beta;
  std::optional<BisimWitness> witness;
  std::size_t pairs_checked = 0;
};

// Candidates: the given laws, plus all Diracs on state spaces of at most
// kDiracCap points and the uniform law (finite spaces). ForAll quantifies over
// the canonical candidates only.
inline constexpr std::size_t kDiracCap = 256;

Verdict quasi_bisim(const System& a, const System& b, Quant qa, Quant qb,
                    const std::vector<Section>& sections, Tick horizon, double tol,
                    const std::vector<InitialLaw>& cand_a = {},
                    const std::vector<InitialLaw>& cand_b = {}, Exec exec = Exec::Parallel);

// Hierarchical systems compare through hom_system. Sections range over every
// assignment on the positions either system can emit within the horizon.
Verdict quasi_bisim(const HierSystem& a, const HierSystem& b, Quant qa, Quant qb, Tick horizon,
                    double tol, const std::vector<InitialLaw>& cand_a = {},
                    const std::vector<InitialLaw>& cand_b = {}, Exec exec = Exec::Parallel);

/// Finite stochastic channel X -> Dist Y.
struct FiniteChannel {
  Space x, y;
  std::map<Point, Dist> rows;

  const Dist& operator()(const Point& p) const;
  static FiniteChannel from_matrix(const Space& x, const Space& y, const Eigen::MatrixXd& k);
};

struct BayesInversion {
  FiniteChannel dagger;
  std::vector<Point> zero_evidence;  // outcomes mapped to the uniform law
};

BayesInversion exact_bayes(const FiniteChannel& c, const Dist& pi);

// Moves eps of mass in the first row from its heaviest atom to the next
// label (cyclically). Rows must have at least eps on that atom.
FiniteChannel perturbed(const FiniteChannel& c, double eps);

// Stateless stochastic channel Xy -> Yy by randomness pushback: the state is a
// table omega in prod_x Y redrawn from prod_x c(x) every tick, and x |-> omega[x]
// is emitted. The initial law is that product.
HierSystem channel_system(const FiniteChannel& c);
// y -> Xy emitting draws of pi.
HierSystem prior_system(const Space& x, const Dist& pi);

struct BayesReport {
  Verdict verdict;
  HierSystem left, right;
};

// left : pi ; copy_X ; (id_X (x) c)      right : pi ; c ; copy_Y ; (cdag (x) id_Y)
// both y -> Xy (x) Yy, compared by exists-exists quasi-bisimilarity.
BayesReport bayes_check(const HierSystem& c, const HierSystem& pi, const HierSystem& cdag,
                        Tick horizon, double tol);

struct NamedVerdict {
  std::string law;
  Verdict verdict;
};

// Counit (both sides), coassociativity and cocommutativity of copy/discard on
// Ay, each compared by forall-forall quasi-bisimilarity.
std::vector<NamedVerdict> comonoid_laws(const Space& a, Tick horizon, double tol,
                                        Exec exec = Exec::Parallel);

// Gaussian laws on R^n as points of R^n x R^(n*n) (mean, row-major covariance).
Space gaussian_state_space(std::size_t n);
Point encode_gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov);
GaussianLaw decode_gaussian(const Point& p);

// B y^T -> PB y^T, b |-> N(b, 0), identity on T.
PolyMap eta_lens(std::size_t b_dim, const Space& t);
// f : PA y^S -> B y^T, g : PB y^T -> C y^U; inserts eta_B between them.
HierSystem hibi_compose(const HierSystem& f, const HierSystem& g);

}  // namespace polydyn
