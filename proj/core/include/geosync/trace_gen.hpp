#pragma once

#include <cstdint>

#include "geosync/latency_matrix.hpp"

namespace geosync {

struct TraceGenConfig {
  int knots_per_pair = 8;
  double jitter_scale = 0.1;   // multiplicative, values stay in base*(1 +/- scale)
  std::int64_t duration_ms = 10000;
  std::int64_t step_ms = 100;
  std::uint64_t seed = 0;
};

/// Synthesizes a time-varying trace from a base matrix: per ordered pair,
/// evenly spaced knots with values base*(1 + U(-jitter, +jitter)) smoothed by
/// the monotone cubic interpolant, sampled every step_ms. Deterministic under
/// a fixed seed; jitter_scale = 0 reproduces the base matrix at every step.
LatencyTrace gen_trace(const LatencyMatrix& base, const TraceGenConfig& cfg);

}  // namespace geosync
