#pragma once

#include <cstddef>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dgdflow {

/// Number of worker threads for jobs <= 0 (hardware default).
inline int resolve_jobs(int jobs) {
#ifdef _OPENMP
  return jobs > 0 ? jobs : omp_get_max_threads();
#else
  (void)jobs;
  return 1;
#endif
}

/// Runs body(i) for i in [0, n). jobs == 1 uses the plain serial loop (the
/// reference path); otherwise iterations are distributed over OpenMP threads.
/// Results must be written to disjoint slots so the outcome is identical for
/// every jobs value.
template <typename Body>
void parallel_for(std::ptrdiff_t n, int jobs, const Body& body) {
  const int workers = resolve_jobs(jobs);
  if (workers <= 1) {
    for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
#else
  for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
#endif
}

}  // namespace dgdflow
