#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace replica_lab {

// Streaming log-sum-exp: accumulates log(sum exp(x_i)) without materializing
// the terms. Deterministic for a fixed insertion order; merge() lets callers
// combine per-block accumulators in a fixed block order.
class LogSumAccumulator {
public:
  void add(double x) {
    if (std::isinf(x) && x < 0) return;
    if (x <= max_) {
      sum_ += std::exp(x - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - x) + 1.0;
      max_ = x;
    }
  }

  void merge(const LogSumAccumulator& other) {
    if (other.sum_ == 0.0) return;
    if (other.max_ <= max_) {
      sum_ += other.sum_ * std::exp(other.max_ - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - other.max_) + other.sum_;
      max_ = other.max_;
    }
  }

  double value() const {
    if (sum_ == 0.0) return -std::numeric_limits<double>::infinity();
    return max_ + std::log(sum_);
  }

private:
  double max_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0.0;
};

inline double log_sum_exp(std::span<const double> xs) {
  LogSumAccumulator acc;
  for (double x : xs) acc.add(x);
  return acc.value();
}

// Shortest round-trip decimal form; byte-stable across runs and platforms.
inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

// Exact binomial coefficient; callers keep n small enough that the result
// fits (asserted via the 128-bit intermediate).
inline std::uint64_t binomial_u64(unsigned n, unsigned k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  unsigned __int128 acc = 1;
  for (unsigned i = 1; i <= k; ++i) {
    acc = acc * (n - k + i) / i;
  }
  return static_cast<std::uint64_t>(acc);
}

// Runs fn(i) for i in [0, count) across at most `workers` threads. Each
// index is processed exactly once; callers write results into per-index
// slots and reduce sequentially, so output never depends on worker count.
template <class Fn>
void parallel_for_indexed(std::size_t count, int workers, Fn&& fn) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::size_t nthreads = std::min<std::size_t>(workers, count);
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (std::size_t t = 0; t < nthreads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < count; i += nthreads) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace replica_lab
