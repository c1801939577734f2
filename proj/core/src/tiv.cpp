#include "geosync/tiv.hpp"

#include "geosync/error.hpp"

namespace geosync {

TivReport tiv_scan(const LatencyMatrix& m) {
  const int n = m.size();
  require(n >= 3, "tiv_scan: need at least 3 nodes");

  TivReport report;
  int violating_pairs = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double direct = m.at(i, j);
      int best_relay = -1;
      double best = direct;
      for (int r = 0; r < n; ++r) {
        if (r == i || r == j) continue;
        const double via = m.at(i, r) + m.at(r, j);
        if (via < best) {
          best = via;
          best_relay = r;
        }
      }
      if (best_relay >= 0) {
        report.violations.push_back({i, j, best_relay, direct, best});
        ++violating_pairs;
      }
    }
  }
  report.violation_fraction =
      static_cast<double>(violating_pairs) / (static_cast<double>(n) * (n - 1));
  return report;
}

}  // namespace geosync
