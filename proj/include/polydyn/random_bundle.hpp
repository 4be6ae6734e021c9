#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "polydyn/coalg.hpp"

namespace polydyn {

using StateMap = std::function<Point(const Point&)>;

/// A finite space with a designated probability measure.
struct ProbabilitySpace {
  Space space;
  Dist measure;

  static ProbabilitySpace make(Space space, Dist measure);
};

/// A deterministic flow on a probability space, expected to preserve its measure.
struct MeasurePreservingSystem {
  ProbabilitySpace base;
  ClosedSystem flow;
};

// Flow on a finite space generated by a one-tick map.
MeasurePreservingSystem measure_system(ProbabilitySpace base, StateMap one_tick);

// Pushforward of the measure along flow(t) equals the measure, per generator tick.
LawReport check_measure_preserving(const MeasurePreservingSystem& mp,
                                   const std::vector<Tick>& generators, double tol = 0.0);

// psi preserves measure and commutes with the flows at the given ticks.
LawReport check_base_morphism(const StateMap& psi, const MeasurePreservingSystem& from,
                              const MeasurePreservingSystem& to, const std::vector<Tick>& ticks,
                              double tol = 0.0);

/// Open system whose states fibre over a measure-preserving base: the
/// projection intertwines every closure with the base flow.
struct RandomSystem {
  MeasurePreservingSystem base;
  System sys;
  StateMap proj;
};

LawReport check_random_system(const RandomSystem& rds, const std::vector<Section>& sections,
                              const std::vector<Tick>& ticks, double tol = 0.0);

// Checked defaults: all sections when at most `kSectionLimit` exist, ticks 0..8.
inline constexpr std::size_t kSectionLimit = 4096;
std::vector<Tick> ticks_upto(Tick n);

// Constructors verify the base and the square and throw LawViolation otherwise.
RandomSystem make_random_system(MeasurePreservingSystem base, System sys, StateMap proj,
                                const std::vector<Tick>& ticks = ticks_upto(8));
RandomSystem reindex_rds(const PolyMap& phi, const RandomSystem& rds,
                         const std::vector<Tick>& ticks = ticks_upto(8));
// Post-composes the projection with a verified base morphism psi.
RandomSystem rebase_rds(const StateMap& psi, const MeasurePreservingSystem& target,
                        const RandomSystem& rds, const std::vector<Tick>& ticks = ticks_upto(8));

/// Open system over p fibred over an open base system over b.
struct BundleSystem {
  System base;
  System total;
  StateMap proj;
};

// For every tick, section sigma of p and varsigma of b:
// proj . total^sigma(t) = base^varsigma(t) . proj on all total states.
LawReport check_bundle(const BundleSystem& bs, const std::vector<Section>& sections_p,
                       const std::vector<Section>& sections_b, const std::vector<Tick>& ticks,
                       double tol = 0.0);

BundleSystem make_bundle(System base, System total, StateMap proj,
                         const std::vector<Tick>& ticks = ticks_upto(8));
BundleSystem reindex_bundle(const PolyMap& phi, const BundleSystem& bs,
                            const std::vector<Tick>& ticks = ticks_upto(8));
// Post-composes the projection with phi, a verified morphism base -> target.
BundleSystem rebase_bundle(const StateMap& phi, const System& target, const BundleSystem& bs,
                           const std::vector<Tick>& ticks = ticks_upto(8));

// Same states, outputs and updates at the given ticks on every state and direction.
LawReport compare_systems(const System& a, const System& b, const std::vector<Tick>& ticks,
                          double tol = 0.0);

/// Euler-Maruyama path of dX = -theta X dt + sigma dW, x_0 .. x_steps.
std::vector<double> ou_path(double theta, double sigma, double h, std::size_t steps,
                            std::uint64_t seed, double x0 = 0.0);

}  // namespace polydyn
