#include "nqg/parallel.h"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nqg {

namespace {
std::atomic<int> g_threads{0};
}

int thread_count() { return g_threads.load(std::memory_order_relaxed); }

void set_thread_count(int n) { g_threads.store(n < 0 ? 0 : n, std::memory_order_relaxed); }

int effective_threads() {
#ifdef _OPENMP
  const int n = thread_count();
  return n == 0 ? omp_get_max_threads() : n;
#else
  return 1;
#endif
}

namespace detail {

void parallel_for_impl(std::size_t n, void (*body)(std::size_t, void*), void* ctx) {
#ifdef _OPENMP
  const int threads = effective_threads();
  if (threads > 1 && n > 1) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
      body(static_cast<std::size_t>(i), ctx);
    return;
  }
#endif
  for (std::size_t i = 0; i < n; ++i) body(i, ctx);
}

}  // namespace detail
}  // namespace nqg
