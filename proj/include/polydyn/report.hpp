#pragma once

#include <cstddef>
#include <string>
#include <type_traits>
#include <vector>

namespace polydyn {

struct Violation {
  std::string where;
  double deviation = 0.0;
};

/// Outcome of checking one law over a finite family of instances.
struct LawReport {
  static constexpr std::size_t kMaxWitnesses = 8;

  std::string law;
  std::size_t checked = 0;
  std::size_t failed = 0;
  double max_deviation = 0.0;
  std::vector<Violation> witnesses;

  bool passed() const { return failed == 0; }

  // Counts one instance; deviations above tol are failures and the first few are kept.
  // `where` is a string or a callable producing one, evaluated only for kept witnesses.
  template <class Where>
  void record(double deviation, double tol, Where&& where) {
    ++checked;
    const bool nan = deviation != deviation;
    if (nan || deviation > max_deviation) max_deviation = deviation;
    if (nan || deviation > tol) {
      ++failed;
      if (witnesses.size() < kMaxWitnesses) {
        if constexpr (std::is_invocable_v<Where>) {
          witnesses.push_back({std::string(where()), deviation});
        } else {
          witnesses.push_back({std::string(where), deviation});
        }
      }
    }
  }

  void merge(const LawReport& other) {
    checked += other.checked;
    failed += other.failed;
    if (other.max_deviation > max_deviation || other.max_deviation != other.max_deviation)
      max_deviation = other.max_deviation;
    for (const auto& w : other.witnesses)
      if (witnesses.size() < kMaxWitnesses) witnesses.push_back(w);
  }
};

}  // namespace polydyn
