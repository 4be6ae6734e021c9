#include "polydyn/laplace.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>

#include "polydyn/error.hpp"

namespace polydyn {

namespace {

constexpr double kMaxCondition = 1e12;
constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // log(2 pi)

void require_dims(const GaussianState& pi, const GaussianChannel& gamma, const Eigen::VectorXd& x,
                  const Eigen::VectorXd& y) {
  const auto n = static_cast<Eigen::Index>(gamma.in_dim);
  const auto m = static_cast<Eigen::Index>(gamma.out_dim);
  if (pi.mean.size() != n || pi.cov.rows() != n || pi.cov.cols() != n || x.size() != n ||
      y.size() != m) {
    std::ostringstream os;
    os << "dimension mismatch: channel " << n << " -> " << m << ", prior " << pi.mean.size()
       << ", x " << x.size() << ", y " << y.size();
    throw ShapeError(os.str());
  }
}

// Log-determinant through a Cholesky factor; require_regular must have passed.
double log_det(const Eigen::MatrixXd& s) {
  const Eigen::LLT<Eigen::MatrixXd> llt(s);
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

Eigen::VectorXd solve(const Eigen::MatrixXd& s, const Eigen::VectorXd& v) { return s.llt().solve(v); }

Eigen::MatrixXd inverse(const Eigen::MatrixXd& s) {
  Eigen::MatrixXd inv = s.llt().solve(Eigen::MatrixXd::Identity(s.rows(), s.cols()));
  return 0.5 * (inv + inv.transpose());
}

double neg_log_density(const Eigen::VectorXd& eps, const Eigen::MatrixXd& cov) {
  return 0.5 * eps.dot(solve(cov, eps)) + 0.5 * (static_cast<double>(eps.size()) * kLog2Pi + log_det(cov));
}

Eigen::VectorXd coords(const Point& p) { return to_eigen(p.is_unit() ? Point::Vec{} : p.as_vec()); }

}  // namespace

GaussianChannel GaussianChannel::affine(Eigen::MatrixXd a, Eigen::VectorXd b, Eigen::MatrixXd cov) {
  if (b.size() != a.rows() || cov.rows() != a.rows() || cov.cols() != a.rows())
    throw ShapeError("affine channel: A, b and the covariance disagree in size");
  require_regular(cov, "channel covariance");
  GaussianChannel g;
  g.in_dim = static_cast<std::size_t>(a.cols());
  g.out_dim = static_cast<std::size_t>(a.rows());
  g.mean = [a, b](const Eigen::VectorXd& x) -> Eigen::VectorXd { return a * x + b; };
  g.jacobian = [a](const Eigen::VectorXd&) -> Eigen::MatrixXd { return a; };
  g.cov = [cov](const Eigen::VectorXd&) -> Eigen::MatrixXd { return cov; };
  g.linear = Affine{a, b};
  g.fixed_cov = cov;
  return g;
}

GaussianChannel GaussianChannel::nonlinear(std::size_t in_dim, std::size_t out_dim, Vector mean,
                                           Matrix jacobian, Eigen::MatrixXd cov) {
  if (cov.rows() != static_cast<Eigen::Index>(out_dim) || cov.cols() != cov.rows())
    throw ShapeError("channel covariance does not match the output dimension");
  require_regular(cov, "channel covariance");
  GaussianChannel g;
  g.in_dim = in_dim;
  g.out_dim = out_dim;
  g.mean = std::move(mean);
  g.jacobian = std::move(jacobian);
  g.cov = [cov](const Eigen::VectorXd&) -> Eigen::MatrixXd { return cov; };
  g.fixed_cov = cov;
  return g;
}

Dist GaussianChannel::operator()(const Eigen::VectorXd& x) const {
  return Dist::gaussian(mean(x), cov(x));
}

void require_regular(const Eigen::MatrixXd& cov, const char* what) {
  if (cov.rows() != cov.cols()) throw ShapeError(std::string(what) + " is not square");
  if (cov.size() == 0) return;
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, cov.cwiseAbs().maxCoeff()))
    throw SingularError(std::string(what) + " is not symmetric");
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(cond <= kMaxCondition)) {
    std::ostringstream os;
    os << what << " is singular (condition number " << cond << ")";
    throw SingularError(os.str());
  }
}

EnergyTerms energy_terms(const GaussianState& pi, const GaussianChannel& gamma,
                         const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  require_dims(pi, gamma, x, y);
  const Eigen::MatrixXd sg = gamma.cov(x);
  require_regular(sg, "channel covariance");
  require_regular(pi.cov, "prior covariance");
  EnergyTerms e;
  e.eps_gamma = y - gamma.mean(x);
  e.eps_pi = x - pi.mean;
  e.eta_gamma = solve(sg, e.eps_gamma);
  e.eta_pi = solve(pi.cov, e.eps_pi);
  return e;
}

double energy(const GaussianState& pi, const GaussianChannel& gamma, const Eigen::VectorXd& x,
              const Eigen::VectorXd& y) {
  const EnergyTerms e = energy_terms(pi, gamma, x, y);
  return neg_log_density(e.eps_gamma, gamma.cov(x)) + neg_log_density(e.eps_pi, pi.cov);
}

Eigen::VectorXd grad_energy(const GaussianState& pi, const GaussianChannel& gamma,
                            const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const EnergyTerms e = energy_terms(pi, gamma, x, y);
  return -gamma.jacobian(x).transpose() * e.eta_gamma + e.eta_pi;
}

Eigen::MatrixXd hessian_energy(const GaussianState& pi, const GaussianChannel& gamma,
                               const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  require_dims(pi, gamma, x, y);
  if (gamma.linear) {
    const Eigen::MatrixXd& a = gamma.linear->A;
    const Eigen::MatrixXd sg = gamma.cov(x);
    require_regular(sg, "channel covariance");
    require_regular(pi.cov, "prior covariance");
    Eigen::MatrixXd h = a.transpose() * sg.llt().solve(a) + inverse(pi.cov);
    return 0.5 * (h + h.transpose());
  }
  const auto n = x.size();
  Eigen::MatrixXd h(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double step = 1e-5 * std::max(1.0, std::abs(x(k)));
    Eigen::VectorXd up = x, down = x;
    up(k) += step;
    down(k) -= step;
    h.col(k) = (grad_energy(pi, gamma, up, y) - grad_energy(pi, gamma, down, y)) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

Eigen::MatrixXd sigma_star(const GaussianState& pi, const GaussianChannel& gamma,
                           const Eigen::VectorXd& mu_rho, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd h = hessian_energy(pi, gamma, mu_rho, y);
  require_regular(h, "Hessian of the energy");
  return inverse(h);
}

double gaussian_entropy(const GaussianState& s) {
  require_regular(s.cov, "covariance");
  const double n = static_cast<double>(s.cov.rows());
  return 0.5 * (n * (kLog2Pi + 1.0) + log_det(s.cov));
}

double free_energy_laplace(const GaussianState& pi, const GaussianChannel& gamma,
                           const GaussianState& rho, const Eigen::VectorXd& y) {
  return energy(pi, gamma, rho.mean, y) - gaussian_entropy(rho);
}

GaussianState rho_update(const Eigen::VectorXd& x, const GaussianState& pi,
                         const Eigen::VectorXd& y, const GaussianChannel& gamma,
                         const LaplaceConfig& cfg) {
  if (!(cfg.lambda >= 0.0)) throw ShapeError("the learning rate must be non-negative");
  GaussianState rho;
  rho.mean = x - cfg.lambda * grad_energy(pi, gamma, x, y);
  rho.cov = sigma_star(pi, gamma, rho.mean, y);
  return rho;
}

Descent descend(const GaussianState& pi, const GaussianChannel& gamma, const Eigen::VectorXd& y,
                const Eigen::VectorXd& x0, const LaplaceConfig& cfg) {
  Descent d;
  Eigen::VectorXd x = x0;
  d.means.push_back(x);
  d.free_energy.push_back(free_energy_laplace(pi, gamma, {x, sigma_star(pi, gamma, x, y)}, y));
  for (std::size_t k = 0; k < cfg.iterations; ++k) {
    const GaussianState rho = rho_update(x, pi, y, gamma, cfg);
    const double moved = (rho.mean - x).cwiseAbs().maxCoeff();
    x = rho.mean;
    d.means.push_back(x);
    d.free_energy.push_back(free_energy_laplace(pi, gamma, rho, y));
    if (moved <= cfg.tolerance) {
      d.converged = true;
      break;
    }
  }
  return d;
}

MonteCarlo free_energy_mc(const GaussianState& pi, const GaussianChannel& gamma,
                          const GaussianState& rho, const Eigen::VectorXd& y, std::size_t samples,
                          std::uint64_t seed, Exec exec) {
  if (samples < 2) throw ShapeError("Monte-Carlo estimates need at least two samples");
  require_regular(rho.cov, "variational covariance");
  const Eigen::MatrixXd l = rho.cov.llt().matrixL();
  const auto n = rho.mean.size();
  const Rng root(seed);
  std::vector<double> e(samples);
  for_each_index(samples, exec, [&](std::size_t k) {
    Rng r = root.split(k);
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = r.normal();
    e[k] = energy(pi, gamma, rho.mean + l * z, y);
  });
  // Sums in index order so that both execution modes agree bit for bit.
  double sum = 0.0;
  for (double v : e) sum += v;
  const double mean = sum / static_cast<double>(samples);
  double ss = 0.0;
  for (double v : e) ss += (v - mean) * (v - mean);
  const double var = ss / static_cast<double>(samples - 1);
  return {mean - gaussian_entropy(rho), std::sqrt(var / static_cast<double>(samples))};
}

double kl_gaussian(const GaussianState& p, const GaussianState& q) {
  require_regular(p.cov, "covariance");
  require_regular(q.cov, "covariance");
  const double n = static_cast<double>(p.mean.size());
  const Eigen::VectorXd d = q.mean - p.mean;
  const double tr = q.cov.llt().solve(p.cov).trace();
  return 0.5 * (tr + d.dot(solve(q.cov, d)) - n + log_det(q.cov) - log_det(p.cov));
}

GaussianState predictive(const GaussianChannel& gamma, const GaussianState& rho) {
  const Eigen::MatrixXd j = gamma.jacobian(rho.mean);
  Eigen::MatrixXd cov = j * rho.cov * j.transpose() + gamma.cov(rho.mean);
  return {gamma.mean(rho.mean), 0.5 * (cov + cov.transpose())};
}

double log_evidence(const GaussianState& pi, const GaussianChannel& gamma, const Eigen::VectorXd& y) {
  if (!gamma.linear) throw UnsupportedError("the evidence is closed-form for affine channels only");
  const GaussianState marginal = predictive(gamma, pi);
  require_regular(marginal.cov, "marginal covariance");
  return -neg_log_density(y - marginal.mean, marginal.cov);
}

GaussianState exact_posterior(const GaussianState& pi, const GaussianChannel& gamma,
                              const Eigen::VectorXd& y) {
  if (!gamma.linear) throw UnsupportedError("the posterior is closed-form for affine channels only");
  require_dims(pi, gamma, pi.mean, y);
  const Eigen::MatrixXd& a = gamma.linear->A;
  const Eigen::MatrixXd sg = gamma.cov(pi.mean);
  const Eigen::MatrixXd precision = a.transpose() * sg.llt().solve(a) + inverse(pi.cov);
  const Eigen::MatrixXd cov = inverse(precision);
  const Eigen::VectorXd info = a.transpose() * solve(sg, y - gamma.linear->b) + solve(pi.cov, pi.mean);
  return {cov * info, cov};
}

HierSystem build_laplace(const GaussianChannel& gamma, const LaplaceConfig& cfg,
                         const std::optional<Eigen::MatrixXd>& input_noise) {
  const std::size_t n = gamma.in_dim;
  const std::size_t m = gamma.out_dim;
  if (input_noise && (input_noise->rows() != static_cast<Eigen::Index>(n) ||
                      input_noise->cols() != static_cast<Eigen::Index>(n)))
    throw ShapeError("input noise does not match the channel input");
  const Space xs = Space::euclid(n);
  const Space ys = Space::euclid(m);
  auto g = std::make_shared<const GaussianChannel>(gamma);

  HierSystem h;
  h.source = Polynomial::monomial(gaussian_state_space(n), xs);
  h.target = Polynomial::monomial(ys, ys);
  h.states = joint_space(xs, ys);
  h.emit = [src = h.source, tgt = h.target, xs, ys](Tick, const Point& xy) {
    const auto [x, y] = split_point(xs, ys, xy);
    return PolyMap::lens(
        src, tgt, [y](const Point&) { return y; },
        [x](const Point&, const Point&) { return x; });
  };
  h.absorb = [g, cfg, input_noise, xs, ys](Tick, const Point& xy, const Point& prior,
                                           const Point& datum) {
    GaussianState pi = decode_gaussian(prior);
    if (input_noise) pi.cov += *input_noise;
    const Eigen::VectorXd x = coords(split_point(xs, ys, xy).first);
    const GaussianState rho = rho_update(x, pi, coords(datum), *g, cfg);
    const GaussianState pred = predictive(*g, rho);
    return joint_law(xs, ys, Dist::gaussian(rho.mean, rho.cov),
                     Dist::gaussian(pred.mean, pred.cov));
  };
  h.initial = Dist::dirac(Point::vec(Point::Vec(n + m, 0.0)));
  return h;
}

HierSystem stack(const std::vector<GaussianChannel>& levels, const LaplaceConfig& cfg) {
  if (levels.empty()) throw ShapeError("a stack needs at least one level");
  HierSystem h = build_laplace(levels.front(), cfg);
  for (std::size_t k = 1; k < levels.size(); ++k) {
    const GaussianChannel& above = levels[k - 1];
    if (levels[k].in_dim != above.out_dim)
      throw ShapeError("level " + std::to_string(k) + " takes " + std::to_string(levels[k].in_dim) +
                       " inputs but the level above predicts " + std::to_string(above.out_dim));
    if (!above.fixed_cov)
      throw UnsupportedError("stacking needs channels with constant covariance");
    h = hibi_compose(h, build_laplace(levels[k], cfg, above.fixed_cov));
  }
  return h;
}

HierSystem skeleton(const HierSystem& h) {
  HierSystem s = h;
  auto inner = std::make_shared<const HierSystem>(h);
  s.absorb = [inner](Tick t, const Point& x, const Point& i, const Point& d) {
    const Dist law = inner->absorb(t, x, i, d);
    if (law.is_gaussian()) return Dist::dirac(Point::vec(to_vec(law.gaussian().mean)));
    if (law.is_dirac()) return law;
    throw UnsupportedError("skeletons are defined for Gaussian and Dirac laws");
  };
  return s;
}

System with_prior(const HierSystem& h, const GaussianState& pi) {
  if (!h.source.has_constant_directions() || !(h.source.positions() == gaussian_state_space(pi.mean.size())))
    throw ShapeError("system does not take a Gaussian prior of dimension " +
                     std::to_string(pi.mean.size()));
  const Point code = encode_gaussian(pi.mean, pi.cov);
  const PolyMap feed = PolyMap::lens(
      Polynomial::y(), h.source, [code](const Point&) { return code; },
      [](const Point&, const Point&) { return Point::unit(); });
  HierSystem prior = lens_system(feed);
  prior.time = h.time;
  return as_system(compose_hier(prior, h));
}

std::vector<LevelLayout> stack_layout(const std::vector<GaussianChannel>& levels) {
  std::vector<LevelLayout> out;
  std::size_t at = 0;
  for (const auto& g : levels) {
    out.push_back({at, g.in_dim, at + g.in_dim, g.out_dim});
    at += g.in_dim + g.out_dim;
  }
  return out;
}

std::vector<Eigen::VectorXd> mean_trajectory(const System& sys, const Section& sigma,
                                             const Point& x0, Tick horizon, std::size_t paths,
                                             std::uint64_t seed, Exec exec) {
  if (paths == 0) throw ShapeError("need at least one path");
  std::vector<std::vector<Point>> runs(paths);
  const Rng root(seed);
  for_each_index(paths, exec, [&](std::size_t k) {
    Rng r = root.split(k);
    runs[k] = simulate(sys, sigma, x0, horizon, r);
  });
  std::vector<Eigen::VectorXd> mean;
  for (Tick t = 0; t <= horizon; ++t) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(x0.as_vec().size()));
    for (const auto& run : runs) acc += to_eigen(run[t].as_vec());
    mean.push_back(acc / static_cast<double>(paths));
  }
  return mean;
}

}  // namespace polydyn
