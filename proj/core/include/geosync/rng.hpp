#pragma once

#include <cstdint>

namespace geosync {

// splitmix64 finalizer; the statistical workhorse behind CounterRng.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based deterministic generator. Every random decision in the
/// toolkit derives from one user seed plus a stream key, so runs are
/// reproducible regardless of call order elsewhere in the process.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix64(seed ^ mix64(stream))) {}

  /// Independent child stream; cheap to create, safe to discard.
  CounterRng substream(std::uint64_t s) const {
    return CounterRng(key_, mix64(s ^ 0xa5a5a5a5a5a5a5a5ULL));
  }

  std::uint64_t next_u64() { return mix64(key_ ^ (0x9e3779b97f4a7c15ULL * ++counter_)); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, bound); bound = 0 yields 0.
  std::uint64_t integer(std::uint64_t bound) {
    if (bound == 0) return 0;
    return next_u64() % bound;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace geosync
