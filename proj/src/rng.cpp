#include "polydyn/rng.hpp"

#include <random>

namespace polydyn {

double Rng::uniform() { return std::generate_canonical<double, 53>(*this); }

double Rng::normal() {
  std::normal_distribution<double> nd(0.0, 1.0);
  return nd(*this);
}

}  // namespace polydyn
