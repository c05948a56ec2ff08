#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

namespace gplb {

using Seed = std::uint64_t;
using Engine = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream seed for task `stream` under `master`.
constexpr Seed derive_seed(Seed master, std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(master) ^ splitmix64(stream ^ 0x5851f42d4c957f2dULL));
}

inline Engine make_engine(Seed seed) { return Engine{seed}; }

/// Streaming mean / variance (Welford), mergeable in a fixed order.
struct RunningStats {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double x) noexcept {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }

  void merge(const RunningStats& other) noexcept {
    if (other.count == 0) return;
    if (count == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(count);
    const double nb = static_cast<double>(other.count);
    const double delta = other.mean - mean;
    const double total = na + nb;
    mean += delta * nb / total;
    m2 += other.m2 + delta * delta * na * nb / total;
    count += other.count;
  }

  double variance() const noexcept {
    return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
  }
  double standard_error() const noexcept {
    return count > 1 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
  }
};

/// Replications per seeded block. Output depends on this constant, never on the thread count.
inline constexpr std::size_t kBlockSize = 256;

/// Runs `total` replications in blocks of kBlockSize. `body(engine, stats, count)` performs
/// `count` replications pushing into `stats`. Blocks are seeded from (seed, block index) and
/// merged in block order.
template <class Body>
RunningStats run_blocks(std::size_t total, Seed seed, unsigned threads, Body&& body) {
  const std::size_t blocks = (total + kBlockSize - 1) / kBlockSize;
  std::vector<RunningStats> partial(blocks);
  auto work = [&](std::size_t b) {
    Engine engine = make_engine(derive_seed(seed, b));
    const std::size_t count = std::min(kBlockSize, total - b * kBlockSize);
    body(engine, partial[b], count);
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(blocks)));
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) work(b);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t b = next++; b < blocks; b = next++) work(b);
      });
    }
  }
  RunningStats out;
  for (const auto& p : partial) out.merge(p);
  return out;
}

}  // namespace gplb
