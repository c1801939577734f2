#pragma once

#include <vector>

#include "geosync/latency_matrix.hpp"

namespace geosync {

struct TivViolation {
  int src = 0;
  int dst = 0;
  int relay = 0;
  double direct_ms = 0.0;
  double relayed_ms = 0.0;
};

struct TivReport {
  std::vector<TivViolation> violations;
  double violation_fraction = 0.0;  // violating ordered pairs / n(n-1)
};

/// Scans every ordered pair for a single-relay detour strictly faster than
/// the direct link; reports the best relay per violating pair.
TivReport tiv_scan(const LatencyMatrix& m);

}  // namespace geosync
