#include "geosync/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "geosync/error.hpp"

namespace geosync {

double percentile(std::vector<double> samples, double p) {
  require(!samples.empty(), "percentile: empty sample set");
  require(p > 0.0 && p <= 1.0, "percentile: p must be in (0, 1]");
  std::sort(samples.begin(), samples.end());
  const auto n = samples.size();
  std::size_t rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
  if (rank < 1) rank = 1;
  if (rank > n) rank = n;
  return samples[rank - 1];
}

Cdf Cdf::from_samples(std::vector<double> samples) {
  require(!samples.empty(), "cdf: empty sample set");
  std::sort(samples.begin(), samples.end());
  Cdf cdf;
  cdf.values = std::move(samples);
  const auto n = cdf.values.size();
  cdf.fractions.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    cdf.fractions[i] = static_cast<double>(i + 1) / static_cast<double>(n);
  return cdf;
}

void Cdf::to_csv(std::ostream& out) const {
  out << "value,cum_fraction\n";
  char buf[128];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f\n", values[i], fractions[i]);
    out << buf;
  }
}

nlohmann::json Comparison::to_json() const {
  return nlohmann::json{{"mean_delta_ms", mean_delta_ms},
                        {"p50_delta_ms", p50_delta_ms},
                        {"p90_delta_ms", p90_delta_ms},
                        {"p99_delta_ms", p99_delta_ms},
                        {"mean_reduction_pct", mean_reduction_pct},
                        {"p50_reduction_pct", p50_reduction_pct},
                        {"p90_reduction_pct", p90_reduction_pct},
                        {"p99_reduction_pct", p99_reduction_pct},
                        {"bytes_reduction_pct", bytes_reduction_pct},
                        {"inter_bytes_reduction_pct", inter_bytes_reduction_pct},
                        {"msgs_reduction_pct", msgs_reduction_pct}};
}

namespace {

double reduction_pct(double a, double b) { return b == 0.0 ? 0.0 : (1.0 - a / b) * 100.0; }

}  // namespace

Comparison compare(const SimReport& a, const SimReport& b) {
  require(a.n == b.n, "compare: node counts differ");
  require(a.rounds.size() == b.rounds.size(), "compare: round counts differ");
  Comparison c;
  c.mean_delta_ms = b.makespan.mean - a.makespan.mean;
  c.p50_delta_ms = b.makespan.p50 - a.makespan.p50;
  c.p90_delta_ms = b.makespan.p90 - a.makespan.p90;
  c.p99_delta_ms = b.makespan.p99 - a.makespan.p99;
  c.mean_reduction_pct = reduction_pct(a.makespan.mean, b.makespan.mean);
  c.p50_reduction_pct = reduction_pct(a.makespan.p50, b.makespan.p50);
  c.p90_reduction_pct = reduction_pct(a.makespan.p90, b.makespan.p90);
  c.p99_reduction_pct = reduction_pct(a.makespan.p99, b.makespan.p99);
  c.bytes_reduction_pct =
      reduction_pct(static_cast<double>(a.totals.bytes), static_cast<double>(b.totals.bytes));
  c.inter_bytes_reduction_pct = reduction_pct(static_cast<double>(a.totals.bytes_inter),
                                              static_cast<double>(b.totals.bytes_inter));
  c.msgs_reduction_pct =
      reduction_pct(static_cast<double>(a.totals.msgs), static_cast<double>(b.totals.msgs));
  return c;
}

std::vector<std::vector<double>> comm_heatmap(const SimReport& report) {
  require(!report.rounds.empty(), "heatmap: report has no rounds");
  const int n = report.n;
  std::vector<std::vector<double>> counts(static_cast<std::size_t>(n),
                                          std::vector<double>(static_cast<std::size_t>(n), 0.0));
  double max_count = 0.0;
  for (const auto& r : report.rounds) {
    for (const auto& [key, stat] : r.links) {
      counts[static_cast<std::size_t>(key.first)][static_cast<std::size_t>(key.second)] +=
          static_cast<double>(stat.msgs);
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) max_count = std::max(max_count, counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
  if (max_count > 0.0)
    for (auto& row : counts)
      for (auto& v : row) v /= max_count;
  return counts;
}

void heatmap_to_csv(const std::vector<std::vector<double>>& heatmap, std::ostream& out) {
  char buf[64];
  for (const auto& row : heatmap) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.6f", row[j]);
      out << (j ? "," : "") << buf;
    }
    out << "\n";
  }
}

}  // namespace geosync
