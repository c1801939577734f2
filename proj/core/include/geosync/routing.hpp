#pragma once

#include <map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "geosync/latency_matrix.hpp"
#include "geosync/planner.hpp"

namespace geosync {

struct RouteEntry {
  int src = 0;
  int dst = 0;
  int relay = -1;  // -1 means the direct path
  double effective_ms = 0.0;

  bool direct() const { return relay < 0; }
};

/// Per ordered aggregator pair, the chosen path (direct or one relay hop)
/// and its effective latency. effective_ms never exceeds the direct latency.
struct RoutePlan {
  std::map<std::pair<int, int>, RouteEntry> routes;

  const RouteEntry* find(int src, int dst) const;
  double effective(const LatencyMatrix& m, int src, int dst) const;

  nlohmann::json to_json() const;
};

/// Picks the relay minimizing src->relay->dst when that beats the direct
/// path by at least min_gain (relayed < (1 - min_gain) * direct); otherwise
/// keeps the direct path. Relay ties go to the lowest relay index.
RouteEntry best_path(const LatencyMatrix& m, int src, int dst,
                     const std::vector<int>& candidate_relays, double min_gain);

/// Routes every ordered aggregator pair; candidate relays are all nodes
/// except the two endpoints. Member<->aggregator links are always direct and
/// are not part of the plan.
RoutePlan build_route_plan(const LatencyMatrix& m, const GroupPlan& plan, double min_gain);

}  // namespace geosync
