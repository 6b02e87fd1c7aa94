#include "detcal/parallel.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace detcal {

unsigned resolve_threads(unsigned requested) noexcept {
  if (requested != 0)
    return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

unsigned chunk_count(std::size_t n, unsigned threads) noexcept {
  const auto t = static_cast<std::size_t>(resolve_threads(threads));
  return static_cast<unsigned>(std::max<std::size_t>(1, std::min(n, t)));
}

void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t, std::size_t, unsigned)> &body) {
  const unsigned chunks = chunk_count(n, threads);
  if (chunks == 1) {
    body(0, n, 0);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> workers;
    workers.reserve(chunks);
    for (unsigned w = 0; w < chunks; ++w) {
      const std::size_t begin = n * w / chunks;
      const std::size_t end = n * (w + 1) / chunks;
      workers.emplace_back([&, begin, end, w] {
        try {
          body(begin, end, w);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure)
            failure = std::current_exception();
        }
      });
    }
  }
  if (failure)
    std::rethrow_exception(failure);
}

} // namespace detcal
