#pragma once

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ddc {

// Execution policy for the data-parallel kernels. Every kernel computes each
// output element from its index alone, so Serial and OpenMP produce
// bit-identical results; the serial path is kept as the reference
// implementation for tests and benchmarks.
enum class ExecMode { Serial, OpenMP };

template <typename F>
void parallel_for(std::int64_t n, ExecMode mode, F&& body) {
  if (mode == ExecMode::OpenMP) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
#endif
  }
  for (std::int64_t i = 0; i < n; ++i) body(i);
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace ddc
