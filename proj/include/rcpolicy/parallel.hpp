#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#include <omp.h>

namespace rcpolicy {

// Serial is the reference path: every parallel kernel must reproduce it
// bit-for-bit, which holds because work items never share accumulators.
enum class Execution { serial, parallel };

// Caps the OpenMP worker count for subsequent parallel regions (<= 0 keeps the
// runtime default).
inline void set_thread_limit(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

inline int thread_limit() { return omp_get_max_threads(); }

/**
 * Runs body(i) for i in [0, count). Under Execution::parallel the indices are
 * distributed over OpenMP threads with dynamic scheduling; body must only
 * write to slots owned by i. The first exception thrown by any body is
 * rethrown on the calling thread once the loop has drained.
 */
template <class Body>
void for_each_index(Execution exec, std::size_t count, Body&& body) {
  if (exec == Execution::serial || count < 2 || omp_in_parallel()) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < n; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace rcpolicy
