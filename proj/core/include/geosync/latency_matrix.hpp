#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace geosync {

/// N x N directed one-way delay matrix in milliseconds. Ground truth for the
/// planner, router and simulator. Asymmetric entries are allowed; the diagonal
/// is always zero and every entry is finite and non-negative.
class LatencyMatrix {
 public:
  LatencyMatrix() = default;

  /// Validates invariants; diagonal entries within 1e-9 of zero are coerced
  /// to exactly zero, anything larger is rejected.
  LatencyMatrix(int n, std::vector<double> delay, std::vector<std::string> labels = {});

  static LatencyMatrix from_csv(std::istream& in);
  static LatencyMatrix from_json(const nlohmann::json& j);
  /// Dispatches on extension: .json -> JSON, anything else -> CSV.
  static LatencyMatrix load_file(const std::filesystem::path& p);

  void to_csv(std::ostream& out) const;
  nlohmann::json to_json() const;

  int size() const { return n_; }
  double at(int i, int j) const { return delay_[static_cast<std::size_t>(i) * n_ + j]; }
  double operator()(int i, int j) const { return at(i, j); }

  /// max(delay[i][j], delay[j][i]) -- the bidirectional cost used by the
  /// planner and the k-center metric.
  double bidir(int i, int j) const { return at(i, j) > at(j, i) ? at(i, j) : at(j, i); }

  double max_off_diagonal() const;

  /// Returns a copy with every entry multiplied by f (e.g. 0.5 for RTT->one-way).
  LatencyMatrix scaled(double f) const;

  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<double>& raw() const { return delay_; }

  bool operator==(const LatencyMatrix& other) const {
    return n_ == other.n_ && delay_ == other.delay_;
  }

 private:
  int n_ = 0;
  std::vector<double> delay_;
  std::vector<std::string> labels_;
};

/// Time-varying latency: one matrix per timestamp, strictly ascending times.
struct LatencyTrace {
  std::vector<std::int64_t> timestamps_ms;
  std::vector<LatencyMatrix> matrices;

  int node_count() const { return matrices.empty() ? 0 : matrices.front().size(); }
  std::size_t steps() const { return timestamps_ms.size(); }

  /// Matrix in effect at time t: the last timestamp <= t, clamped at the ends.
  const LatencyMatrix& at_time(std::int64_t t_ms) const;

  void validate() const;

  /// JSONL: one {"t_ms": int, "delay": [[...]]} object per line, ascending t_ms.
  static LatencyTrace load_jsonl(std::istream& in);
  void save_jsonl(std::ostream& out) const;
  static LatencyTrace load_file(const std::filesystem::path& p);
};

}  // namespace geosync
