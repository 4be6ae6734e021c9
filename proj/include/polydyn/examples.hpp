#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "polydyn/hier.hpp"
#include "polydyn/laplace.hpp"
#include "polydyn/random_bundle.hpp"

// Small named systems shared by the command line, the benchmarks and the tests.
namespace polydyn::examples {

// Closed counter on range(n): s |-> s + 1 mod n over y.
System counter(std::size_t n);
// Closed Markov chain on range(k) with row-stochastic K.
System markov_cell(const Eigen::MatrixXd& k);
Eigen::MatrixXd cell_matrix();  // [[0.9, 0.1], [0.2, 0.8]]
// Deterministic system whose update depends on the tick, so its flow law fails.
System clocked_counter(std::size_t n);

// Seeded deterministic finite system: at most max_states states, max_positions
// positions, and 1..max_dirs tabulated directions per position.
System random_finite(std::uint64_t seed, std::size_t max_states = 6, std::size_t max_positions = 3,
                     std::size_t max_dirs = 3);

// x' = -x over y, RK4 with step h, position = x.
System decay(double h);
// x' = a over R y^R, position x, direction a.
System drift(double h);

MeasurePreservingSystem cyclic_shift(std::size_t n);
// Rotation of {0,1}^bits under the product of fair coins.
MeasurePreservingSystem window_shift(std::size_t bits);
// Swap on Z_2 under (0.9, 0.1); not measure preserving.
MeasurePreservingSystem biased_swap();

// Skew product over the cyclic shift on Z_n: states (w, x) with x in range(m),
// interface range(2) y^range(2), update ((w, x), a) |-> (w + 1, x + w + a mod m).
RandomSystem skew_product(std::size_t n = 3, std::size_t m = 4);
// Same, but the update also resets w to 0 at x = 0, breaking the square.
System broken_skew_product(std::size_t n = 3, std::size_t m = 4);

// Base over b = range(2) y^{0: range(2), 1: 1} cycling range(3) regardless of
// input; total over p = range(2) y^range(2) on range(3) x range(2).
BundleSystem finite_bundle();

// Channel [[0.8, 0.2], [0.3, 0.7]] with prior (0.6, 0.4).
FiniteChannel worked_channel();
Dist worked_prior();

// a = 2, Sigma_gamma = 1, pi = N(0, 1), y = 1.
GaussianChannel scalar_model();
GaussianState scalar_prior();

}  // namespace polydyn::examples
