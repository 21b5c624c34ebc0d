#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <vector>

namespace rpod {

// Runs body(r) for r in [0, count) on up to `threads` OpenMP threads.
// Replicates must be independent (each derives its own random stream), so the
// outcome is the same for any thread count. If replicates throw, the
// exception of the lowest-indexed failing replicate is rethrown.
template <class Body>
void for_each_replicate(std::size_t count, int threads, Body&& body) {
  if (threads <= 1 || count < 2) {
    for (std::size_t r = 0; r < count; ++r) body(r);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  const auto total = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::int64_t r = 0; r < total; ++r) {
    try {
      body(static_cast<std::size_t>(r));
    } catch (...) {
      errors[static_cast<std::size_t>(r)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Thread count actually available to OpenMP (1 when built without it).
int available_threads();

}  // namespace rpod
