#include <doctest.h>

#include <cmath>
#include <numbers>

#include "polydyn/error.hpp"
#include "polydyn/laplace.hpp"

using namespace polydyn;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXd v1(double a) { return Eigen::VectorXd::Constant(1, a); }
Eigen::MatrixXd m1(double a) { return Eigen::MatrixXd::Constant(1, 1, a); }

// a = 2, sigma_gamma^2 = 1, pi = N(0, 1)
GaussianChannel scalar_model() { return GaussianChannel::affine(m1(2.0), v1(0.0), m1(1.0)); }
GaussianState unit_prior() { return {v1(0.0), m1(1.0)}; }

// Multivariate normal log-density written out with an explicit inverse and determinant.
double log_normal(const Eigen::VectorXd& x, const Eigen::VectorXd& mu, const Eigen::MatrixXd& s) {
  const Eigen::VectorXd d = x - mu;
  const double k = static_cast<double>(x.size());
  return -0.5 * d.dot(s.inverse() * d) - 0.5 * std::log(std::pow(2.0 * kPi, k) * s.determinant());
}

Eigen::MatrixXd random_spd(Eigen::Index n, Rng& rng) {
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = rng.normal();
  return a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

Eigen::VectorXd random_vec(Eigen::Index n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

Eigen::MatrixXd random_mat(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

double fd_rel_error(const GaussianState& pi, const GaussianChannel& g, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& y) {
  const Eigen::VectorXd grad = grad_energy(pi, g, x, y);
  Eigen::VectorXd fd(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = 1e-5;
    Eigen::VectorXd up = x, down = x;
    up(k) += h;
    down(k) -= h;
    fd(k) = (energy(pi, g, up, y) - energy(pi, g, down, y)) / (2.0 * h);
  }
  return (grad - fd).norm() / std::max(1e-8, std::max(grad.norm(), fd.norm()));
}

}  // namespace

TEST_CASE("energy of the scalar model") {
  const auto g = scalar_model();
  const auto pi = unit_prior();
  CHECK(std::abs(energy(pi, g, v1(0.4), v1(1.0)) - (0.02 + 0.08 + std::log(2.0 * kPi))) <= 1e-12);
  // zero residuals leave the normalizers
  CHECK(std::abs(energy(pi, g, v1(0.0), v1(0.0)) - std::log(2.0 * kPi)) <= 1e-12);

  Rng rng(5);
  for (int k = 0; k < 20; ++k) {
    const Eigen::Index n = 1 + k % 3, m = 1 + (k / 3) % 3;
    const GaussianChannel gm = GaussianChannel::affine(random_mat(m, n, rng), random_vec(m, rng),
                                                       random_spd(m, rng));
    const GaussianState p{random_vec(n, rng), random_spd(n, rng)};
    const Eigen::VectorXd x = random_vec(n, rng), y = random_vec(m, rng);
    const double joint = log_normal(x, p.mean, p.cov) + log_normal(y, gm.mean(x), gm.cov(x));
    CHECK(std::abs(energy(p, gm, x, y) + joint) <= 1e-10 * std::max(1.0, std::abs(joint)));
  }

  const EnergyTerms e = energy_terms(pi, g, v1(0.4), v1(1.0));
  CHECK(e.eps_gamma(0) == doctest::Approx(0.2));
  CHECK(e.eps_pi(0) == doctest::Approx(0.4));
  CHECK(e.eta_gamma(0) == doctest::Approx(0.2));
}

TEST_CASE("gradient of the energy") {
  const auto g = scalar_model();
  const auto pi = unit_prior();
  CHECK(std::abs(grad_energy(pi, g, v1(0.4), v1(1.0))(0)) <= 1e-12);
  CHECK(grad_energy(pi, g, v1(0.0), v1(0.0)).norm() == 0.0);

  Rng rng(17);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Eigen::Index n = 1 + k % 4, m = 1 + (k / 4) % 3;
    const GaussianChannel gm = GaussianChannel::affine(random_mat(m, n, rng), random_vec(m, rng),
                                                       random_spd(m, rng));
    const GaussianState p{random_vec(n, rng), random_spd(n, rng)};
    worst = std::max(worst, fd_rel_error(p, gm, random_vec(n, rng), random_vec(m, rng)));
  }
  CHECK(worst <= 1e-5);

  // a nonlinear mean with constant covariance
  const GaussianChannel tanh_channel = GaussianChannel::nonlinear(
      2, 1,
      [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return v1(std::tanh(x(0)) + x(0) * x(1)); },
      [](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
        Eigen::MatrixXd j(1, 2);
        j << 1.0 - std::tanh(x(0)) * std::tanh(x(0)) + x(1), x(0);
        return j;
      },
      m1(0.3));
  const GaussianState p2{Eigen::Vector2d(0.1, -0.2), random_spd(2, rng)};
  for (int k = 0; k < 20; ++k)
    CHECK(fd_rel_error(p2, tanh_channel, random_vec(2, rng), random_vec(1, rng)) <= 1e-5);
}

TEST_CASE("optimal covariance") {
  const auto pi = unit_prior();
  CHECK(std::abs(sigma_star(pi, scalar_model(), v1(0.4), v1(1.0))(0, 0) - 0.2) <= 1e-12);
  const auto flat = GaussianChannel::affine(m1(1e-9), v1(0.0), m1(1.0));
  const GaussianState wide{v1(0.0), m1(3.0)};
  CHECK(sigma_star(wide, flat, v1(0.0), v1(1.0))(0, 0) == doctest::Approx(3.0).epsilon(1e-12));

  Eigen::MatrixXd a = Eigen::Vector2d(2.0, 0.5).asDiagonal();
  const Eigen::MatrixXd sg = Eigen::Vector2d(1.0, 0.25).asDiagonal();
  const Eigen::MatrixXd sp = Eigen::Vector2d(1.0, 2.0).asDiagonal();
  const auto diag = GaussianChannel::affine(a, Eigen::Vector2d::Zero(), sg);
  const Eigen::MatrixXd s = sigma_star({Eigen::Vector2d::Zero(), sp}, diag, Eigen::Vector2d(0.3, 0.1),
                                       Eigen::Vector2d(1, 1));
  CHECK(s(0, 1) == 0.0);
  CHECK(std::abs(s(0, 0) - 1.0 / (4.0 / 1.0 + 1.0 / 1.0)) <= 1e-12);
  CHECK(std::abs(s(1, 1) - 1.0 / (0.25 / 0.25 + 1.0 / 2.0)) <= 1e-12);

  // the finite-difference Hessian agrees with the analytic one on a linear mean
  const GaussianChannel wrapped = GaussianChannel::nonlinear(
      2, 2, [a](const Eigen::VectorXd& x) -> Eigen::VectorXd { return a * x; },
      [a](const Eigen::VectorXd&) -> Eigen::MatrixXd { return a; }, sg);
  const Eigen::MatrixXd fd = sigma_star({Eigen::Vector2d::Zero(), sp}, wrapped,
                                        Eigen::Vector2d(0.3, 0.1), Eigen::Vector2d(1, 1));
  CHECK((fd - s).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("conjugate posterior is the stationary point") {
  Rng rng(99);
  for (int k = 0; k < 30; ++k) {
    const Eigen::Index n = 1 + k % 3, m = 1 + (k / 3) % 3;
    const Eigen::MatrixXd a = random_mat(m, n, rng);
    const Eigen::VectorXd b = random_vec(m, rng);
    const Eigen::MatrixXd sg = random_spd(m, rng);
    const GaussianState p{random_vec(n, rng), random_spd(n, rng)};
    const Eigen::VectorXd y = random_vec(m, rng);
    // precision-form oracle
    const Eigen::MatrixXd prec = a.transpose() * sg.inverse() * a + p.cov.inverse();
    const Eigen::MatrixXd cov = prec.inverse();
    const Eigen::VectorXd mean = cov * (a.transpose() * sg.inverse() * (y - b) + p.cov.inverse() * p.mean);
    const GaussianChannel g = GaussianChannel::affine(a, b, sg);
    CHECK(grad_energy(p, g, mean, y).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, prec.norm() * mean.norm()));
    CHECK((sigma_star(p, g, mean, y) - cov).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, cov.norm()));
    const GaussianState post = exact_posterior(p, g, y);
    CHECK((post.mean - mean).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("entropy and the Laplace free energy") {
  CHECK(gaussian_entropy({v1(3.0), m1(1.0)}) == doctest::Approx(1.41894).epsilon(1e-5));
  CHECK(std::abs(gaussian_entropy({v1(0.0), m1(1.0)}) - 0.5 * std::log(2.0 * kPi * std::exp(1.0))) <= 1e-15);
  CHECK(std::abs(gaussian_entropy({v1(0.0), m1(7.0)}) - gaussian_entropy({v1(0.0), m1(1.0)}) -
                 0.5 * std::log(7.0)) <= 1e-14);
  CHECK(gaussian_entropy({v1(-5.0), m1(2.0)}) == gaussian_entropy({v1(5.0), m1(2.0)}));

  const auto g = scalar_model();
  const auto pi = unit_prior();
  const double expected =
      0.02 + 0.08 + std::log(2.0 * kPi) - 0.5 * std::log(2.0 * kPi * std::exp(1.0) * 0.2);
  CHECK(std::abs(free_energy_laplace(pi, g, {v1(0.4), m1(0.2)}, v1(1.0)) - expected) <= 1e-12);

  // one small step along the negative gradient lowers F^L
  const Eigen::VectorXd x = v1(1.3);
  const Eigen::VectorXd x2 = x - 0.01 * grad_energy(pi, g, x, v1(1.0));
  CHECK(free_energy_laplace(pi, g, {x2, m1(0.2)}, v1(1.0)) <
        free_energy_laplace(pi, g, {x, m1(0.2)}, v1(1.0)));
}

TEST_CASE("rho update and descent") {
  const auto g = scalar_model();
  const auto pi = unit_prior();
  LaplaceConfig cfg;
  const GaussianState fixed = rho_update(v1(0.4), pi, v1(1.0), g, cfg);
  CHECK(std::abs(fixed.mean(0) - 0.4) <= 1e-15);
  CHECK(std::abs(fixed.cov(0, 0) - 0.2) <= 1e-12);
  cfg.lambda = 0.0;
  const GaussianState frozen = rho_update(v1(-1.5), pi, v1(1.0), g, cfg);
  CHECK(frozen.mean(0) == -1.5);
  CHECK(std::abs(frozen.cov(0, 0) - 0.2) <= 1e-12);

  cfg.lambda = 0.05;
  cfg.tolerance = 1e-12;
  const Descent d = descend(pi, g, v1(1.0), v1(0.0), cfg);
  std::size_t hit = d.means.size();
  for (std::size_t k = 0; k < d.means.size(); ++k)
    if (std::abs(d.means[k](0) - 0.4) <= 1e-6) {
      hit = k;
      break;
    }
  CHECK(hit <= 10000);
  CHECK(d.converged);
  // non-increasing up to rounding in the last bits once at the minimum
  for (std::size_t k = 1; k < d.free_energy.size(); ++k)
    CHECK(d.free_energy[k] <= d.free_energy[k - 1] + 4e-16 * std::abs(d.free_energy[k - 1]));
}

TEST_CASE("singular covariances are rejected") {
  CHECK_THROWS_AS(GaussianChannel::affine(m1(1.0), v1(0.0), m1(0.0)), SingularError);
  const GaussianState degenerate{Eigen::Vector2d::Zero(), Eigen::Matrix2d::Ones()};
  const auto g = GaussianChannel::affine(Eigen::MatrixXd::Ones(1, 2), v1(0.0), m1(1.0));
  try {
    energy(degenerate, g, Eigen::Vector2d::Zero(), v1(0.0));
    FAIL("expected a singular covariance error");
  } catch (const SingularError& e) {
    CHECK(std::string(e.what()).find("condition number") != std::string::npos);
  }
  CHECK_THROWS_AS(energy(unit_prior(), scalar_model(), Eigen::Vector2d::Zero(), v1(0.0)), ShapeError);
}

TEST_CASE("Monte-Carlo free energy") {
  Rng rng(7);
  for (int k = 0; k < 4; ++k) {
    const Eigen::Index n = 1 + k % 2, m = 1 + k / 2;
    const GaussianChannel g = GaussianChannel::affine(random_mat(m, n, rng), random_vec(m, rng),
                                                      random_spd(m, rng));
    const GaussianState pi{random_vec(n, rng), random_spd(n, rng)};
    const Eigen::VectorXd y = random_vec(m, rng);
    const GaussianState rho{random_vec(n, rng), random_spd(n, rng)};
    const MonteCarlo mc = free_energy_mc(pi, g, rho, y, 100000, 1234 + k);
    // F - KL(rho, posterior) = -log evidence
    const double target = kl_gaussian(rho, exact_posterior(pi, g, y)) - log_evidence(pi, g, y);
    CHECK(std::abs(mc.estimate - target) <= 3.0 * mc.std_error);

    // at the optimal covariance the exact and Laplace values differ by n / 2
    const GaussianState post = exact_posterior(pi, g, y);
    const MonteCarlo at_star = free_energy_mc(pi, g, post, y, 100000, 77 + k);
    const double gap = at_star.estimate - free_energy_laplace(pi, g, post, y);
    CHECK(std::abs(gap - 0.5 * static_cast<double>(n)) <= 3.0 * at_star.std_error);
  }
  const MonteCarlo serial = free_energy_mc(unit_prior(), scalar_model(), {v1(0.4), m1(0.2)}, v1(1.0),
                                           20000, 5, Exec::Serial);
  const MonteCarlo parallel = free_energy_mc(unit_prior(), scalar_model(), {v1(0.4), m1(0.2)},
                                             v1(1.0), 20000, 5, Exec::Parallel);
  CHECK(serial.estimate == parallel.estimate);
  CHECK(serial.std_error == parallel.std_error);
  CHECK(kl_gaussian({v1(1.0), m1(2.0)}, {v1(1.0), m1(2.0)}) == doctest::Approx(0.0));
}

TEST_CASE("one-level Laplace system") {
  const auto g = scalar_model();
  LaplaceConfig cfg;
  const HierSystem h = build_laplace(g, cfg);
  CHECK(h.states == Space::euclid(2));
  const Point state = Point::vec({0.25, -0.75});
  const Point prior = encode_gaussian(v1(0.0), m1(1.0));
  const PolyMap f = h.emit(0, state);
  CHECK(f.forward(prior) == Point::vec({-0.75}));
  CHECK(f.back_point(prior, Point::vec({1.0})) == Point::vec({0.25}));

  const Dist next = h.absorb(0, state, prior, Point::vec({1.0}));
  const GaussianState rho = rho_update(v1(0.25), unit_prior(), v1(1.0), g, cfg);
  CHECK(next.gaussian().mean(0) == rho.mean(0));
  CHECK(next.gaussian().cov(0, 0) == rho.cov(0, 0));
  CHECK(next.gaussian().mean(1) == doctest::Approx(2.0 * rho.mean(0)));
  CHECK(next.gaussian().cov(1, 1) == doctest::Approx(4.0 * rho.cov(0, 0) + 1.0));
  CHECK(next.gaussian().cov(0, 1) == 0.0);

  const System closed = with_prior(skeleton(h), unit_prior());
  const Section datum = Section::constant(closed.interface, Point::vec({1.0}));
  const auto laws = state_laws(closed, datum, Dist::dirac(Point::vec({0.0, 0.0})), 2000);
  CHECK(std::abs(laws.back().point().as_vec()[0] - 0.4) <= 1e-6);

  LaplaceConfig still = cfg;
  still.lambda = 0.0;
  const System frozen = with_prior(skeleton(build_laplace(g, still)), unit_prior());
  const auto fl = state_laws(frozen, datum, Dist::dirac(Point::vec({0.7, 0.0})), 50);
  for (const auto& l : fl) CHECK(l.point().as_vec()[0] == 0.7);

  // the sampled system converges in mean
  const System noisy = with_prior(h, unit_prior());
  // x_t ~ N(0.75 x_{t-1} + 0.1, 0.2) has stationary variance 0.2 / (1 - 0.75^2)
  const auto mean = mean_trajectory(noisy, datum, Point::vec({0.0, 0.0}), 120, 1000, 3);
  CHECK(std::abs(mean.back()(0) - 0.4) <= 4.0 * std::sqrt(0.2 / (1.0 - 0.5625) / 1000));
  const auto serial = mean_trajectory(noisy, datum, Point::vec({0.0, 0.0}), 20, 64, 3, Exec::Serial);
  const auto parallel = mean_trajectory(noisy, datum, Point::vec({0.0, 0.0}), 20, 64, 3, Exec::Parallel);
  for (std::size_t t = 0; t < serial.size(); ++t) CHECK(serial[t] == parallel[t]);
}

TEST_CASE("two-level stack reaches the joint posterior") {
  // x1 ~ N(m0, v0), x2 | x1 ~ N(a1 x1 + b1, s1), y | x2 ~ N(a2 x2 + b2, s2)
  const double m0 = 0.5, v0 = 2.0, a1 = 1.5, b1 = -0.2, s1 = 0.5, a2 = 0.8, b2 = 0.1, s2 = 0.3;
  const double y = 1.7;
  Eigen::Matrix2d prec;
  prec << 1.0 / v0 + a1 * a1 / s1, -a1 / s1, -a1 / s1, 1.0 / s1 + a2 * a2 / s2;
  const Eigen::Vector2d info(m0 / v0 - a1 * b1 / s1, b1 / s1 + a2 * (y - b2) / s2);
  const Eigen::Vector2d oracle = prec.ldlt().solve(info);

  const std::vector<GaussianChannel> levels{GaussianChannel::affine(m1(a1), v1(b1), m1(s1)),
                                            GaussianChannel::affine(m1(a2), v1(b2), m1(s2))};
  LaplaceConfig cfg;
  const HierSystem st = stack(levels, cfg);
  const auto layout = stack_layout(levels);
  CHECK(st.states == Space::euclid(4));
  CHECK(layout[1].x_offset == 2);
  const System closed = with_prior(skeleton(st), {v1(m0), m1(v0)});
  const Section datum = Section::constant(closed.interface, Point::vec({y}));
  const auto laws = state_laws(closed, datum, Dist::dirac(Point::vec({0, 0, 0, 0})), 6000);
  const auto& s = laws.back().point().as_vec();
  CHECK(std::abs(s[layout[0].x_offset] - oracle(0)) <= 1e-4);
  CHECK(std::abs(s[layout[1].x_offset] - oracle(1)) <= 1e-4);

  // single level is build_laplace itself
  const HierSystem one = stack({levels[0]}, cfg);
  const HierSystem direct = build_laplace(levels[0], cfg);
  const Point st0 = Point::vec({0.3, 0.1});
  const Point pr = encode_gaussian(v1(0.0), m1(1.0));
  CHECK(distance(one.absorb(0, st0, pr, Point::vec({1.0})),
                 direct.absorb(0, st0, pr, Point::vec({1.0}))) == 0.0);

  CHECK_THROWS_AS(stack({levels[0], GaussianChannel::affine(Eigen::MatrixXd::Ones(1, 2), v1(0), m1(1))}, cfg),
                  ShapeError);
}

TEST_CASE("three-level stacks associate") {
  const std::vector<GaussianChannel> levels{
      GaussianChannel::affine(m1(1.2), v1(0.1), m1(0.6)),
      GaussianChannel::affine(Eigen::MatrixXd::Constant(2, 1, 0.7), Eigen::Vector2d(0.0, 0.3),
                              Eigen::Vector2d(0.4, 0.9).asDiagonal()),
      GaussianChannel::affine(Eigen::MatrixXd::Constant(1, 2, -0.5), v1(0.2), m1(0.2))};
  LaplaceConfig cfg;
  const HierSystem a = build_laplace(levels[0], cfg);
  const HierSystem b = build_laplace(levels[1], cfg, levels[0].fixed_cov);
  const HierSystem c = build_laplace(levels[2], cfg, levels[1].fixed_cov);
  const HierSystem left = hibi_compose(hibi_compose(a, b), c);
  const HierSystem right = hibi_compose(a, hibi_compose(b, c));
  const GaussianState pi{v1(0.0), m1(1.0)};
  const System sl = with_prior(skeleton(left), pi);
  const System sr = with_prior(skeleton(right), pi);
  CHECK(sl.states == sr.states);
  const Dist init = Dist::dirac(Point::vec(Point::Vec(sl.states.dim(), 0.0)));
  for (double y : {-1.0, 0.5, 2.0}) {
    const Section datum = Section::constant(sl.interface, Point::vec({y}));
    const Trace tl = trace(sl, datum, init, 200);
    const Trace tr = trace(sr, datum, init, 200);
    double worst = 0.0;
    for (std::size_t t = 0; t < tl.values.size(); ++t)
      worst = std::max(worst, distance(tl.values[t], tr.values[t]));
    CHECK(worst == 0.0);
    const auto ll = state_laws(sl, datum, init, 200);
    const auto lr = state_laws(sr, datum, init, 200);
    CHECK(ll.back().point() == lr.back().point());
  }
  const System st = with_prior(skeleton(stack(levels, cfg)), pi);
  const Section datum = Section::constant(st.interface, Point::vec({0.5}));
  CHECK(trace(st, datum, init, 50).values.back().point() ==
        trace(sl, datum, init, 50).values.back().point());
}
