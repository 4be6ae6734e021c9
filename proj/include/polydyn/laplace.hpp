#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "polydyn/hier.hpp"

namespace polydyn {

/// Channel x |-> N(mean(x), cov(x)) with an analytic Jacobian of the mean.
struct GaussianChannel {
  using Vector = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
  using Matrix = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  Vector mean;
  Matrix jacobian;
  Matrix cov;
  std::optional<Affine> linear;            // mean(x) = A x + b
  std::optional<Eigen::MatrixXd> fixed_cov;  // cov does not depend on x

  static GaussianChannel affine(Eigen::MatrixXd a, Eigen::VectorXd b, Eigen::MatrixXd cov);
  static GaussianChannel nonlinear(std::size_t in_dim, std::size_t out_dim, Vector mean,
                                   Matrix jacobian, Eigen::MatrixXd cov);

  Dist operator()(const Eigen::VectorXd& x) const;
};

using GaussianState = GaussianLaw;

struct EnergyTerms {
  Eigen::VectorXd eps_gamma;  // y - mean(x)
  Eigen::VectorXd eps_pi;     // x - mu_pi
  Eigen::VectorXd eta_gamma;  // Sigma_gamma(x)^-1 eps_gamma
  Eigen::VectorXd eta_pi;     // Sigma_pi^-1 eps_pi
};

struct LaplaceConfig {
  double lambda = 0.05;
  std::size_t iterations = 10000;
  double tolerance = 1e-10;  // stop once a step moves the mean less than this
};

// Throws SingularError (with the condition number) unless cov is symmetric
// positive definite and reasonably conditioned.
void require_regular(const Eigen::MatrixXd& cov, const char* what);

EnergyTerms energy_terms(const GaussianState& pi, const GaussianChannel& gamma,
                         const Eigen::VectorXd& x, const Eigen::VectorXd& y);
// -log p_gamma(y | x) - log p_pi(x).
double energy(const GaussianState& pi, const GaussianChannel& gamma, const Eigen::VectorXd& x,
              const Eigen::VectorXd& y);
// -J(x)^T eta_gamma + eta_pi, with Sigma_gamma held fixed at x.
Eigen::VectorXd grad_energy(const GaussianState& pi, const GaussianChannel& gamma,
                            const Eigen::VectorXd& x, const Eigen::VectorXd& y);
// J^T Sigma_gamma^-1 J + Sigma_pi^-1 for affine means, central differences of
// grad_energy otherwise.
Eigen::MatrixXd hessian_energy(const GaussianState& pi, const GaussianChannel& gamma,
                               const Eigen::VectorXd& x, const Eigen::VectorXd& y);
Eigen::MatrixXd sigma_star(const GaussianState& pi, const GaussianChannel& gamma,
                           const Eigen::VectorXd& mu_rho, const Eigen::VectorXd& y);
double gaussian_entropy(const GaussianState& s);
double free_energy_laplace(const GaussianState& pi, const GaussianChannel& gamma,
                           const GaussianState& rho, const Eigen::VectorXd& y);
GaussianState rho_update(const Eigen::VectorXd& x, const GaussianState& pi,
                         const Eigen::VectorXd& y, const GaussianChannel& gamma,
                         const LaplaceConfig& cfg);

struct Descent {
  std::vector<Eigen::VectorXd> means;  // x_0, x_1, ...
  std::vector<double> free_energy;     // F^L at (x_k, sigma_star(x_k))
  bool converged = false;
};

// Iterates rho_update from x0 until a step is below cfg.tolerance.
Descent descend(const GaussianState& pi, const GaussianChannel& gamma, const Eigen::VectorXd& y,
                const Eigen::VectorXd& x0, const LaplaceConfig& cfg);

struct MonteCarlo {
  double estimate = 0.0;
  double std_error = 0.0;
};

// E_rho[E(x, y)] - S(rho) from independent draws x ~ rho.
MonteCarlo free_energy_mc(const GaussianState& pi, const GaussianChannel& gamma,
                          const GaussianState& rho, const Eigen::VectorXd& y, std::size_t samples,
                          std::uint64_t seed, Exec exec = Exec::Parallel);

double kl_gaussian(const GaussianState& p, const GaussianState& q);
// Affine channels only.
double log_evidence(const GaussianState& pi, const GaussianChannel& gamma, const Eigen::VectorXd& y);
GaussianState exact_posterior(const GaussianState& pi, const GaussianChannel& gamma,
                              const Eigen::VectorXd& y);
// Law of the channel's output when its input is drawn from rho; linearized
// at the mean of rho for non-affine channels.
GaussianState predictive(const GaussianChannel& gamma, const GaussianState& rho);

// One-level Laplace system (P X, X) -> (Y, Y) on states X x Y (flattened to
// R^(n+m)). It emits pi |-> y and (pi, y') |-> x, and absorbs (pi, y') by
// drawing x from rho_update(x, pi, y') and y from the prediction of gamma at
// that law. input_noise is added to the covariance of incoming priors.
HierSystem build_laplace(const GaussianChannel& gamma, const LaplaceConfig& cfg,
                         const std::optional<Eigen::MatrixXd>& input_noise = std::nullopt);

// Levels ordered from the top latent level down to the data. Level k > 0 gets
// the prediction of level k-1 as its prior, with the covariance of channel k-1.
HierSystem stack(const std::vector<GaussianChannel>& levels, const LaplaceConfig& cfg);

// Replaces every absorbed law by the Dirac at its mean.
HierSystem skeleton(const HierSystem& h);

// Closes a (P X, X) -> (Y, Y) system with a constant prior, giving a system over
// the monomial Y y^Y.
System with_prior(const HierSystem& h, const GaussianState& pi);

/// Offsets of each level's (x, y) block in the flattened stack state.
struct LevelLayout {
  std::size_t x_offset, x_dim, y_offset, y_dim;
};
std::vector<LevelLayout> stack_layout(const std::vector<GaussianChannel>& levels);

// Average state trajectory over independently sampled paths.
std::vector<Eigen::VectorXd> mean_trajectory(const System& sys, const Section& sigma,
                                             const Point& x0, Tick horizon, std::size_t paths,
                                             std::uint64_t seed, Exec exec = Exec::Parallel);

}  // namespace polydyn
