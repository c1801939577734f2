#pragma once

#include <iosfwd>
#include <vector>

#include <nlohmann/json.hpp>

#include "geosync/simulator.hpp"

namespace geosync {

/// Nearest-rank percentile: the value at 1-based index ceil(p * n) of the
/// sorted samples. No interpolation, so results are bit-reproducible.
double percentile(std::vector<double> samples, double p);

struct Cdf {
  std::vector<double> values;     // ascending
  std::vector<double> fractions;  // ascending, ends at 1.0

  static Cdf from_samples(std::vector<double> samples);
  /// value,cum_fraction rows.
  void to_csv(std::ostream& out) const;
};

struct Comparison {
  double mean_delta_ms = 0.0;
  double p50_delta_ms = 0.0;
  double p90_delta_ms = 0.0;
  double p99_delta_ms = 0.0;
  double mean_reduction_pct = 0.0;
  double p50_reduction_pct = 0.0;
  double p90_reduction_pct = 0.0;
  double p99_reduction_pct = 0.0;
  double bytes_reduction_pct = 0.0;
  double inter_bytes_reduction_pct = 0.0;
  double msgs_reduction_pct = 0.0;

  nlohmann::json to_json() const;
};

/// Paired deltas of a against baseline b (B as the reference): reductions are
/// 1 - a/b. Reports must share node count and round count.
Comparison compare(const SimReport& a, const SimReport& b);

/// Messages per ordered pair summed over rounds, divided by the matrix
/// maximum; zero diagonal.
std::vector<std::vector<double>> comm_heatmap(const SimReport& report);

void heatmap_to_csv(const std::vector<std::vector<double>>& heatmap, std::ostream& out);

}  // namespace geosync
