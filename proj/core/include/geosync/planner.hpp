#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "geosync/latency_matrix.hpp"

namespace geosync {

/// Partition of the nodes into k groups plus one aggregator per group.
/// assignment[i] is node i's group id; group ids are canonical: node 0 is in
/// group 0 and group g+1 first appears after group g (restricted-growth form).
struct GroupPlan {
  int k = 0;
  std::vector<int> assignment;
  std::vector<int> aggregators;  // group id -> node
  double objective_ms = 0.0;

  std::vector<std::vector<int>> members() const;
  int group_of(int node) const { return assignment[static_cast<std::size_t>(node)]; }
  bool is_aggregator(int node) const;

  /// Relabels group ids into restricted-growth (first-occurrence) order.
  void canonicalize();

  nlohmann::json to_json() const;
  static GroupPlan from_json(const nlohmann::json& j);
};

/// Throws unless the plan is structurally valid for an n-node system:
/// every node in exactly one group, one aggregator per group drawn from its
/// members, no empty groups.
void validate_plan(int n, const GroupPlan& plan);

enum class SolverKind { exact, kcenter };

struct PlannerConfig {
  bool auto_k = true;
  int fixed_k = 2;
  SolverKind solver = SolverKind::exact;
  int max_exact_n = 12;
  double damping_threshold = 0.20;
  int damping_window = 5;
};

/// The plan's single-round cost: worst member<->aggregator latency (both
/// directions) plus worst inter-aggregator latency. Single-group plans have
/// no inter term; singleton groups contribute zero to the intra term.
double objective_T(const LatencyMatrix& m, const GroupPlan& plan);

/// Exact minimizer of objective_T over all partitions into exactly k
/// non-empty groups and all aggregator choices. Branch and bound on the
/// running best value with group-label symmetry breaking. Ties resolve to
/// the lexicographically smallest assignment vector, then the smallest
/// aggregator indices. Refuses n > config.max_exact_n.
GroupPlan solve_exact(const LatencyMatrix& m, int k, const PlannerConfig& config = {});

/// Farthest-point clustering on d(i,j) = max(delay[i][j], delay[j][i]).
/// First center is the minimax node; each following center maximizes the
/// distance to its nearest center; nodes attach to the nearest center (ties
/// to the earliest center). Centers become the aggregators. The seed is
/// accepted for interface uniformity; the procedure is deterministic.
GroupPlan solve_kcenter(const LatencyMatrix& m, int k, std::uint64_t seed = 0);

struct CostBreakdown {
  double intra_msgs = 0.0;
  double inter_msgs = 0.0;
  double total_msgs = 0.0;
};

/// Hierarchical message-count model: 2N(N/k - 1) intra plus 2k(k-1) inter,
/// with real-valued N/k.
CostBreakdown cost_model(int n, int k);

struct KStarResult {
  double k_star = 1.0;
  int lo = 1;
  int hi = 1;
};

/// Closed-form optimal group count (n^2/2)^(1/3) plus the banded integer
/// search range; clamped to [1, n]. For n < 4 grouping degenerates and the
/// result is (1.0, [1, n]).
KStarResult k_star(int n);

/// Best plan over the k_star search range: exact solver when n fits under
/// config.max_exact_n, k-center otherwise; ties go to the smaller k.
GroupPlan auto_plan(const LatencyMatrix& m, const PlannerConfig& config = {},
                    std::uint64_t seed = 0);

struct PairDeviation {
  int src = 0;
  int dst = 0;
  double baseline_ms = 0.0;
  double observed_ms = 0.0;
};

/// Damped re-grouping trigger: true iff some pair's relative deviation
/// exceeds the threshold in every one of the last `window` observation
/// rounds. Entries with zero baseline are skipped.
bool should_regroup(const std::vector<std::vector<PairDeviation>>& history, double threshold,
                    int window);

}  // namespace geosync
