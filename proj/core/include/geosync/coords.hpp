#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "geosync/latency_matrix.hpp"
#include "geosync/rng.hpp"

namespace geosync {

/// Position in a Euclidean space scaled to milliseconds, plus the usual
/// access-link "height" term and a running confidence weight.
struct NetCoordinate {
  std::vector<double> position;
  double height = 0.0;
  double error_estimate = 1.0;  // stays in (0, 1]
};

struct CoordConfig {
  double cc = 0.25;  // step gain
  double ce = 0.25;  // error-estimate gain
  int dim = 3;
};

/// Distance in height-vector space: Euclidean between positions plus both
/// heights. Symmetric by construction.
double coord_estimate(const NetCoordinate& a, const NetCoordinate& b);

struct CalibrationEntry {
  int i = 0;
  int j = 0;
  double measured_ms = 0.0;
  double estimated_ms = 0.0;
  double rel_error = 0.0;
};

struct CalibrationSample {
  int i = 0;
  int j = 0;
  double measured_ms = 0.0;
};

struct CalibrationReport {
  std::vector<CalibrationEntry> exceeding;  // pairs above tolerance after replay
};

/// Spring-relaxation coordinate estimator over RTT samples. Each update moves
/// one node along the measured-vs-estimated disagreement, weighted by the
/// relative confidence of the two endpoints.
class CoordSystem {
 public:
  CoordSystem(int n, CoordConfig cfg = {}, std::uint64_t seed = 0);

  int size() const { return static_cast<int>(coords_.size()); }
  const NetCoordinate& coord(int i) const { return coords_[static_cast<std::size_t>(i)]; }
  const CoordConfig& config() const { return cfg_; }

  double estimate(int i, int j) const;

  /// One RTT observation for (i, j); moves node i. Returns false (and leaves
  /// the system untouched) for the degenerate rtt == 0 sample.
  bool update(int i, int j, double rtt_ms);

  /// Symmetric matrix of pairwise estimates with zero diagonal.
  LatencyMatrix estimated_matrix() const;

  /// Replays measured samples through update(), then reports the pairs whose
  /// relative estimation error still exceeds the tolerance.
  CalibrationReport calibrate(const std::vector<CalibrationSample>& samples, double tolerance);

  nlohmann::json to_json() const;

 private:
  CoordConfig cfg_;
  std::vector<NetCoordinate> coords_;
  CounterRng rng_;
};

}  // namespace geosync
