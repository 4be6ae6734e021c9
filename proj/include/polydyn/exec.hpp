#pragma once

#include <cstddef>
#include <exception>

namespace polydyn {

// Parallel paths use OpenMP and reduce in index order, so both give identical results.
enum class Exec { Serial, Parallel };

// Calls fn(i) for i in [0, n). The first exception thrown by any index is rethrown.
template <class F>
void for_each_index(std::size_t n, Exec exec, F&& fn) {
  if (exec == Exec::Serial) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(polydyn_for_each_index)
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace polydyn
