#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bsnse {

namespace detail {
inline int& worker_count_storage() {
  static int count = 1;
  return count;
}
}  // namespace detail

/// Number of workers used by parallel_for. Results never depend on it.
inline int worker_count() { return detail::worker_count_storage(); }
inline void set_worker_count(int n) { detail::worker_count_storage() = n < 1 ? 1 : n; }

/// Static-schedule parallel loop over [0, n). Each index must write only to
/// its own output slots. The exception thrown at the lowest index wins, so
/// error reporting is deterministic too.
template <class Body>
void parallel_for(std::ptrdiff_t n, Body&& body) {
  std::exception_ptr first_error;
  std::ptrdiff_t first_index = n;
  std::mutex guard;
#pragma omp parallel for schedule(static) num_threads(worker_count())
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(guard);
      if (i < first_index) {
        first_index = i;
        first_error = std::current_exception();
      }
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace bsnse
