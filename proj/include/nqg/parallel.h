#ifndef NQG_PARALLEL_H
#define NQG_PARALLEL_H

#include <cstddef>

namespace nqg {

// Global worker count used by all parallel kernels. 0 means "all cores",
// 1 forces the serial path. Parallel kernels write results by index into
// pre-sized buffers, so their output is identical to the serial reference
// for any thread count.
int thread_count();
void set_thread_count(int n);
int effective_threads();

namespace detail {
void parallel_for_impl(std::size_t n, void (*body)(std::size_t, void*), void* ctx);
}

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  detail::parallel_for_impl(
      n,
      [](std::size_t i, void* ctx) { (*static_cast<Fn*>(ctx))(i); },
      &fn);
}

// Serial reference loop. Kept separate so tests and benchmarks can compare
// kernels against it explicitly.
template <typename Fn>
void serial_for(std::size_t n, Fn&& fn) {
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

}  // namespace nqg

#endif
