#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fgbfi::par {

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline int thread_id() {
#ifdef _OPENMP
  return omp_get_thread_num();
#else
  return 0;
#endif
}

/// Resolve a threads knob: 0 means all available, n >= 1 means exactly n.
inline int resolve(int threads) { return threads <= 0 ? max_threads() : threads; }

}  // namespace fgbfi::par
