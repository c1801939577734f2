#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "geosync/crdt.hpp"
#include "geosync/filter.hpp"
#include "geosync/latency_matrix.hpp"
#include "geosync/planner.hpp"
#include "geosync/routing.hpp"
#include "geosync/workload.hpp"

namespace geosync {

enum class SimMode { baseline, grouped };

const char* to_string(SimMode m);
SimMode sim_mode_from_string(const std::string& s);

struct FailureEvent {
  int round = 0;
  std::string kind;        // aggregator_crash | node_crash | partition | heal
  int node = -1;           // crash kinds
  std::vector<int> nodes;  // partition: the isolated side

  nlohmann::json to_json() const;
  static FailureEvent from_json(const nlohmann::json& j);
};

struct SimConfig {
  int rounds = 100;
  int round_interval_ms = 10;  // epoch cadence
  SimMode mode = SimMode::grouped;
  PlannerConfig planner;
  double min_gain = 0.05;
  WorkloadConfig workload;
  std::vector<FailureEvent> failures;
  double retransmit_timeout_ms = 50.0;
  bool filter_enabled = true;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static SimConfig from_json(const nlohmann::json& j);
  void validate() const;
};

struct LinkStat {
  std::uint64_t msgs = 0;
  std::uint64_t bytes = 0;
};

struct RoundResult {
  int round = 0;
  std::int64_t t_ms = 0;
  std::string mode;  // baseline | grouped | fallback_direct
  double makespan_ms = 0.0;
  double gather_ms = 0.0;
  double inter_ms = 0.0;
  double scatter_ms = 0.0;
  double planner_objective_ms = 0.0;  // two-term objective on this round's matrix
  int plan_index = -1;
  std::vector<std::uint64_t> per_node_msgs;
  std::map<std::pair<int, int>, LinkStat> links;
  FilterStats filter;
  std::uint64_t bytes_total = 0;
  std::uint64_t bytes_inter = 0;
  std::vector<std::string> events;

  nlohmann::json to_json() const;
  static RoundResult from_json(const nlohmann::json& j);
};

struct EpochRecord {
  std::int64_t epoch = 0;
  std::vector<std::uint64_t> digests;  // meaningful where closed_round >= 0
  std::vector<int> closed_round;       // -1 while the snapshot is withheld
  bool all_closed = false;
  bool converged = false;  // every closed digest equal

  nlohmann::json to_json() const;
  static EpochRecord from_json(const nlohmann::json& j);
};

struct SimTotals {
  std::uint64_t msgs = 0;
  std::uint64_t bytes = 0;
  std::uint64_t bytes_inter = 0;
  std::uint64_t filtered_bytes = 0;  // bytes_in - bytes_out over all filter stages
};

struct MakespanSummary {
  double mean = 0.0, p50 = 0.0, p90 = 0.0, p99 = 0.0, min = 0.0, max = 0.0;
};

struct SimReport {
  SimConfig config;
  int n = 0;
  std::vector<GroupPlan> plans;
  std::vector<RoundResult> rounds;
  SimTotals totals;
  MakespanSummary makespan;
  std::vector<EpochRecord> epochs;
  // Delayed-delivery accounting (crash retransmissions).
  double max_extra_visibility_ms = 0.0;
  double visibility_bound_ms = 0.0;
  std::uint64_t late_deliveries = 0;
  // Out-of-band recovery traffic (retransmits, partition heal backlog).
  std::uint64_t recovery_msgs = 0;
  std::uint64_t recovery_bytes = 0;
  int stall_rounds = 0;  // rounds some replica had an overdue open epoch
  std::uint64_t final_state_digest = 0;
  bool all_converged = false;

  nlohmann::json to_json() const;
  static SimReport from_json(const nlohmann::json& j);
  /// One row per round: round, makespan, stages, msgs, bytes in/out.
  void to_csv(std::ostream& out) const;
};

/// Flat all-to-all: every ordered pair exchanges directly; no filtering.
RoundResult baseline_round(const LatencyMatrix& m,
                           const std::vector<std::vector<Update>>& per_node_updates);

/// Three-stage hierarchical round: gather to aggregators, filtered
/// inter-aggregator exchange over the route plan, scatter back. kept_global
/// (when non-null) receives the union of the aggregators' kept sets.
RoundResult grouped_round(const LatencyMatrix& m, const GroupPlan& plan, const RoutePlan& routes,
                          const std::vector<std::vector<Update>>& per_node_updates,
                          std::map<int, AggregatorState>& agg_states, bool filter_enabled = true,
                          std::vector<Update>* kept_global = nullptr);

/// Deterministic trace-driven simulation: damped re-planning, TIV routing,
/// white-data filtering, failure injection, epoch-converged CRDT merging.
SimReport run_simulation(const LatencyTrace& trace, const SimConfig& config,
                         const GroupPlan* initial_plan = nullptr);

}  // namespace geosync
