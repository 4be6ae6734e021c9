#include "polydyn/dist.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "polydyn/error.hpp"

namespace polydyn {

Eigen::VectorXd to_eigen(const Point::Vec& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Point::Vec to_vec(const Eigen::VectorXd& v) { return Point::Vec(v.data(), v.data() + v.size()); }

namespace {

void check_psd(const Eigen::MatrixXd& cov) {
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + cov.cwiseAbs().maxCoeff()))
    throw ShapeError("covariance is not symmetric");
  if (cov.rows() == 0) return;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -Dist::kPsdTol)
    throw ShapeError("covariance is not positive semi-definite");
}

GaussianLaw as_gaussian(const Dist& d) {
  if (d.is_gaussian()) return d.gaussian();
  if (d.is_dirac() && d.point().is_vec()) {
    Eigen::VectorXd m = to_eigen(d.point().as_vec());
    return {m, Eigen::MatrixXd::Zero(m.size(), m.size())};
  }
  throw UnsupportedError("law " + d.str() + " has no Gaussian form");
}

}  // namespace

Dist Dist::dirac(Point p) {
  Dist d;
  d.rep_ = std::move(p);
  return d;
}

Dist Dist::categorical(std::map<Point, double> weights) {
  double total = 0.0;
  for (auto it = weights.begin(); it != weights.end();) {
    if (!(it->second >= 0.0)) throw ShapeError("negative categorical weight at " + it->first.str());
    total += it->second;
    if (it->second == 0.0) {
      it = weights.erase(it);
    } else {
      ++it;
    }
  }
  if (std::abs(total - 1.0) > kNormTol)
    throw ShapeError("categorical weights sum to " + std::to_string(total));
  Dist d;
  d.rep_ = std::move(weights);
  return d;
}

Dist Dist::from_weights(std::map<Point, double> weights) {
  for (auto it = weights.begin(); it != weights.end();) {
    if (it->second == 0.0) {
      it = weights.erase(it);
    } else {
      ++it;
    }
  }
  if (weights.size() == 1 && std::abs(weights.begin()->second - 1.0) <= kNormTol)
    return dirac(weights.begin()->first);
  return categorical(std::move(weights));
}

Dist Dist::gaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size())
    throw ShapeError("Gaussian covariance has the wrong shape");
  check_psd(cov);
  Dist d;
  d.rep_ = GaussianLaw{std::move(mean), 0.5 * (cov + cov.transpose())};
  return d;
}

Dist Dist::uniform(const Space& s) {
  auto pts = s.enumerate();
  if (pts.empty()) throw ShapeError("uniform law on an empty space");
  std::map<Point, double> w;
  for (auto& p : pts) w.emplace(std::move(p), 1.0 / static_cast<double>(pts.size()));
  if (w.size() == 1) return dirac(w.begin()->first);
  Dist d;
  d.rep_ = std::move(w);
  return d;
}

const Point& Dist::point() const {
  if (!is_dirac()) throw ShapeError("law " + str() + " is not a Dirac");
  return std::get<Point>(rep_);
}

const GaussianLaw& Dist::gaussian() const {
  if (!is_gaussian()) throw ShapeError("law " + str() + " is not Gaussian");
  return std::get<GaussianLaw>(rep_);
}

std::vector<std::pair<Point, double>> Dist::atoms() const {
  if (is_dirac()) return {{std::get<Point>(rep_), 1.0}};
  if (kind() == Kind::Categorical) {
    const auto& w = std::get<std::map<Point, double>>(rep_);
    return {w.begin(), w.end()};
  }
  throw UnsupportedError("Gaussian law has no atoms");
}

double Dist::prob(const Point& p) const {
  if (is_dirac()) return std::get<Point>(rep_) == p ? 1.0 : 0.0;
  if (kind() == Kind::Categorical) {
    const auto& w = std::get<std::map<Point, double>>(rep_);
    auto it = w.find(p);
    return it == w.end() ? 0.0 : it->second;
  }
  return 0.0;
}

Eigen::VectorXd Dist::mean() const {
  if (is_gaussian()) return gaussian().mean;
  Eigen::VectorXd m;
  for (const auto& [p, w] : atoms()) {
    Eigen::VectorXd v = to_eigen(p.as_vec());
    if (m.size() == 0) m = Eigen::VectorXd::Zero(v.size());
    if (v.size() != m.size()) throw ShapeError("atoms of differing dimension");
    m += w * v;
  }
  return m;
}

Eigen::MatrixXd Dist::covariance() const {
  if (is_gaussian()) return gaussian().cov;
  Eigen::VectorXd m = mean();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(m.size(), m.size());
  for (const auto& [p, w] : atoms()) {
    Eigen::VectorXd v = to_eigen(p.as_vec()) - m;
    c += w * v * v.transpose();
  }
  return c;
}

std::string Dist::str() const {
  std::ostringstream os;
  os.precision(12);
  switch (kind()) {
    case Kind::Dirac:
      os << "dirac(" << point().str() << ")";
      break;
    case Kind::Categorical: {
      os << "categorical{";
      bool first = true;
      for (const auto& [p, w] : std::get<std::map<Point, double>>(rep_)) {
        os << (first ? "" : ", ") << p.str() << ": " << w;
        first = false;
      }
      os << "}";
      break;
    }
    case Kind::Gaussian: {
      const auto& g = gaussian();
      os << "gaussian(mean=" << g.mean.transpose() << "; cov=" << g.cov.reshaped().transpose()
         << ")";
      break;
    }
  }
  return os.str();
}

PointMap PointMap::identity() {
  return {[](const Point& x) { return x; }, std::nullopt};
}

PointMap PointMap::affine_map(Eigen::MatrixXd A, Eigen::VectorXd b) {
  if (A.rows() != b.size()) throw ShapeError("affine map offset has the wrong size");
  PointMap m;
  m.fn = [A, b](const Point& x) {
    Eigen::VectorXd v = to_eigen(x.as_vec());
    if (v.size() != A.cols()) throw ShapeError("affine map applied to a vector of the wrong size");
    return Point::vec(to_vec(A * v + b));
  };
  m.affine = Affine{std::move(A), std::move(b)};
  return m;
}

Kernel Kernel::unit() {
  return {[](const Point& x) { return Dist::dirac(x); }, std::nullopt};
}

Kernel Kernel::pure(PointMap f) {
  Kernel k;
  if (f.affine) {
    const auto& a = *f.affine;
    k.affine = AffineGaussian{a.A, a.b, Eigen::MatrixXd::Zero(a.A.rows(), a.A.rows())};
  }
  k.fn = [f = std::move(f)](const Point& x) { return Dist::dirac(f(x)); };
  return k;
}

Kernel Kernel::affine_gaussian(Eigen::MatrixXd A, Eigen::VectorXd b, Eigen::MatrixXd noise) {
  if (A.rows() != b.size() || noise.rows() != b.size() || noise.cols() != b.size())
    throw ShapeError("affine Gaussian kernel has inconsistent shapes");
  Dist::gaussian(b, noise);  // validates noise
  Kernel k;
  k.fn = [A, b, noise](const Point& x) {
    Eigen::VectorXd v = to_eigen(x.as_vec());
    if (v.size() != A.cols()) throw ShapeError("kernel applied to a vector of the wrong size");
    return Dist::gaussian(A * v + b, noise);
  };
  k.affine = AffineGaussian{std::move(A), std::move(b), std::move(noise)};
  return k;
}

Kernel Kernel::stochastic_matrix(const Space& s, const Eigen::MatrixXd& K) {
  auto pts = s.enumerate();
  if (K.rows() != static_cast<Eigen::Index>(pts.size()) || K.cols() != K.rows())
    throw ShapeError("transition matrix does not match " + s.str());
  std::map<Point, Dist> rows;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::map<Point, double> w;
    for (std::size_t j = 0; j < pts.size(); ++j) w[pts[j]] += K(i, j);
    rows.emplace(pts[i], Dist::from_weights(std::move(w)));
  }
  return Kernel::of([rows = std::move(rows)](const Point& x) {
    auto it = rows.find(x);
    if (it == rows.end()) throw ShapeError("state " + x.str() + " outside the kernel's space");
    return it->second;
  });
}

Dist pushforward(const PointMap& f, const Dist& d) {
  if (d.is_gaussian()) {
    if (!f.affine)
      throw UnsupportedError(
          "pushforward of a Gaussian along a non-affine map has no closed form; use sampling");
    const auto& g = d.gaussian();
    const auto& a = *f.affine;
    return Dist::gaussian(a.A * g.mean + a.b, a.A * g.cov * a.A.transpose());
  }
  if (d.is_dirac()) return Dist::dirac(f(d.point()));
  std::map<Point, double> w;
  for (const auto& [p, wp] : d.atoms()) w[f(p)] += wp;
  return Dist::from_weights(std::move(w));
}

Dist kleisli_extend(const Kernel& k, const Dist& d) {
  if (d.is_dirac()) return k(d.point());
  if (d.is_gaussian()) {
    if (!k.affine)
      throw UnsupportedError(
          "Kleisli extension of a Gaussian needs an affine-Gaussian kernel; use sampling");
    const auto& g = d.gaussian();
    const auto& a = *k.affine;
    return Dist::gaussian(a.A * g.mean + a.b, a.A * g.cov * a.A.transpose() + a.noise);
  }
  std::map<Point, double> w;
  for (const auto& [p, wp] : d.atoms()) {
    Dist inner = k(p);
    if (inner.is_gaussian())
      throw UnsupportedError("mixtures of Gaussians are outside the exact regimes; use sampling");
    for (const auto& [q, wq] : inner.atoms()) w[q] += wp * wq;
  }
  return Dist::from_weights(std::move(w));
}

Kernel kleisli_compose(const Kernel& second, const Kernel& first) {
  Kernel k;
  k.fn = [second, first](const Point& x) { return kleisli_extend(second, first(x)); };
  if (first.affine && second.affine) {
    const auto& f = *first.affine;
    const auto& s = *second.affine;
    if (s.A.cols() != f.A.rows()) throw ShapeError("affine kernels do not compose");
    k.affine = AffineGaussian{s.A * f.A, s.A * f.b + s.b, s.A * f.noise * s.A.transpose() + s.noise};
  }
  return k;
}

Dist dst(const Dist& a, const Dist& b) {
  if (a.is_gaussian() || b.is_gaussian()) {
    GaussianLaw ga = as_gaussian(a);
    GaussianLaw gb = as_gaussian(b);
    const auto n = ga.mean.size();
    const auto m = gb.mean.size();
    Eigen::VectorXd mean(n + m);
    mean << ga.mean, gb.mean;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n + m, n + m);
    cov.topLeftCorner(n, n) = ga.cov;
    cov.bottomRightCorner(m, m) = gb.cov;
    return Dist::gaussian(std::move(mean), std::move(cov));
  }
  if (a.is_dirac() && b.is_dirac()) return Dist::dirac(Point::pair(a.point(), b.point()));
  std::map<Point, double> w;
  for (const auto& [p, wp] : a.atoms())
    for (const auto& [q, wq] : b.atoms()) w[Point::pair(p, q)] += wp * wq;
  return Dist::from_weights(std::move(w));
}

Point sample(const Dist& d, Rng& rng) {
  switch (d.kind()) {
    case Dist::Kind::Dirac:
      return d.point();
    case Dist::Kind::Categorical: {
      const auto atoms = d.atoms();
      double u = rng.uniform();
      double acc = 0.0;
      for (const auto& [p, w] : atoms) {
        acc += w;
        if (u < acc) return p;
      }
      return atoms.back().first;
    }
    case Dist::Kind::Gaussian: {
      const auto& g = d.gaussian();
      const auto n = g.mean.size();
      Eigen::VectorXd z(n);
      for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.normal();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.cov);
      Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
      return Point::vec(to_vec(g.mean + es.eigenvectors() * root.asDiagonal() * z));
    }
  }
  return d.point();
}

double distance(const Dist& a, const Dist& b) {
  if (a.is_finite() && b.is_finite()) {
    if (a.is_dirac() && b.is_dirac() && a.point().is_vec() && b.point().is_vec()) {
      const auto& x = a.point().as_vec();
      const auto& y = b.point().as_vec();
      if (x.size() != y.size()) return std::numeric_limits<double>::infinity();
      double dev = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) dev = std::max(dev, std::abs(x[i] - y[i]));
      return dev;
    }
    double dev = 0.0;
    for (const auto& [p, w] : a.atoms()) dev = std::max(dev, std::abs(w - b.prob(p)));
    for (const auto& [p, w] : b.atoms()) dev = std::max(dev, std::abs(w - a.prob(p)));
    return dev;
  }
  try {
    GaussianLaw ga = as_gaussian(a);
    GaussianLaw gb = as_gaussian(b);
    if (ga.mean.size() != gb.mean.size()) return std::numeric_limits<double>::infinity();
    if (ga.mean.size() == 0) return 0.0;
    return std::max((ga.mean - gb.mean).cwiseAbs().maxCoeff(),
                    (ga.cov - gb.cov).cwiseAbs().maxCoeff());
  } catch (const UnsupportedError&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace polydyn
