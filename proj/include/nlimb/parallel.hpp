#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace nlimb {

// Fixed-size fan-out over contiguous index chunks. Work for chunk c always
// covers the same indices for a given pool size, and callers write results
// into per-index slots, so merged output is in index order.
class WorkerPool {
 public:
  explicit WorkerPool(int workers = default_workers())
      : workers_(std::max(1, workers)) {}

  int size() const { return workers_; }

  // Calls fn(begin, end) over a partition of [0, count); the calling thread
  // takes the first chunk. The first exception thrown by any chunk is
  // rethrown after all chunks finish.
  template <typename Fn>
  void for_chunks(std::size_t count, Fn&& fn) const {
    if (count == 0) return;
    const std::size_t chunks =
        std::min<std::size_t>(count, static_cast<std::size_t>(workers_));
    if (chunks == 1) {
      fn(std::size_t{0}, count);
      return;
    }
    std::vector<std::exception_ptr> errors(chunks);
    auto bounds = [&](std::size_t c) {
      return std::pair{count * c / chunks, count * (c + 1) / chunks};
    };
    {
      std::vector<std::jthread> threads;
      for (std::size_t c = 1; c < chunks; ++c) {
        threads.emplace_back([&, c] {
          try {
            auto [b, e] = bounds(c);
            fn(b, e);
          } catch (...) {
            errors[c] = std::current_exception();
          }
        });
      }
      try {
        auto [b, e] = bounds(0);
        fn(b, e);
      } catch (...) {
        errors[0] = std::current_exception();
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  // NLIMB_WORKERS if set to a positive integer, else the logical core count.
  static int default_workers() {
    if (const char* env = std::getenv("NLIMB_WORKERS")) {
      try {
        const int n = std::stoi(env);
        if (n > 0) return n;
      } catch (...) {
      }
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  }

 private:
  int workers_;
};

}  // namespace nlimb
