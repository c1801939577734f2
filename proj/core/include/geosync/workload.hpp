#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include <nlohmann/json.hpp>

#include "geosync/update.hpp"

namespace geosync {

/// Key 0 is a read-only anchor, committed at version 1 before any round runs.
/// Planted conflicts read it at version 0, which is stale everywhere from the
/// first epoch on; generated writes use keys >= 1.
inline constexpr std::uint64_t kAnchorKey = 0;
inline constexpr std::uint64_t kAnchorVersion = 1;

std::map<std::uint64_t, std::uint64_t> genesis_versions();

struct WorkloadConfig {
  int updates_per_node = 20;
  std::uint64_t payload_min = 1024;
  std::uint64_t payload_max = 1024;
  double conflict_ratio = 0.0;
  double dup_ratio = 0.0;
  double null_ratio = 0.0;
  double zipf_theta = 0.0;  // 0 = uniform key choice
  int key_space = 64;       // writable keys 1..key_space
  std::set<int> silent_nodes;  // generate nothing for these nodes

  nlohmann::json to_json() const;
  static WorkloadConfig from_json(const nlohmann::json& j);
  void validate() const;
};

/// Deterministic per-round update source. White-data classes are planted by
/// per-node quota with error-diffusion accumulators, so long-run class
/// fractions track the configured ratios exactly rather than in expectation.
class WorkloadGenerator {
 public:
  WorkloadGenerator(int n_nodes, WorkloadConfig cfg, std::uint64_t seed);

  /// All updates generated by `node` in `epoch`, in arrival order. Duplicates
  /// always follow the update they repeat.
  std::vector<Update> generate_node_round(int node, std::int64_t epoch);

  /// Convenience: per-node batches for one epoch (index = node id).
  std::vector<std::vector<Update>> generate_round(std::int64_t epoch);

  const WorkloadConfig& config() const { return cfg_; }
  int nodes() const { return n_; }

 private:
  std::uint64_t sample_key(struct SampleCtx& ctx);

  int n_;
  WorkloadConfig cfg_;
  std::uint64_t seed_;
  std::vector<double> zipf_cdf_;
  // error-diffusion accumulators, one per node per planted class
  std::vector<double> conflict_acc_, dup_acc_, null_acc_;
};

}  // namespace geosync
