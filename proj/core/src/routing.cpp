#include "geosync/routing.hpp"

#include "geosync/error.hpp"

namespace geosync {

const RouteEntry* RoutePlan::find(int src, int dst) const {
  auto it = routes.find({src, dst});
  return it == routes.end() ? nullptr : &it->second;
}

double RoutePlan::effective(const LatencyMatrix& m, int src, int dst) const {
  const RouteEntry* e = find(src, dst);
  return e ? e->effective_ms : m.at(src, dst);
}

nlohmann::json RoutePlan::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [pair, e] : routes) {
    nlohmann::json j{{"src", e.src}, {"dst", e.dst}, {"effective_ms", e.effective_ms}};
    if (!e.direct()) j["relay"] = e.relay;
    arr.push_back(std::move(j));
  }
  return arr;
}

RouteEntry best_path(const LatencyMatrix& m, int src, int dst,
                     const std::vector<int>& candidate_relays, double min_gain) {
  require(src != dst, "best_path: src and dst coincide");
  const double direct = m.at(src, dst);

  int best_relay = -1;
  double best = 0.0;
  for (int r : candidate_relays) {
    if (r == src || r == dst) continue;
    const double via = m.at(src, r) + m.at(r, dst);
    if (best_relay < 0 || via < best) {
      best = via;
      best_relay = r;
    }
  }

  RouteEntry e{src, dst, -1, direct};
  if (best_relay >= 0 && best < (1.0 - min_gain) * direct) {
    e.relay = best_relay;
    e.effective_ms = best;
  }
  return e;
}

RoutePlan build_route_plan(const LatencyMatrix& m, const GroupPlan& plan, double min_gain) {
  validate_plan(m.size(), plan);
  std::vector<int> all_nodes(static_cast<std::size_t>(m.size()));
  for (int i = 0; i < m.size(); ++i) all_nodes[static_cast<std::size_t>(i)] = i;

  RoutePlan rp;
  for (int g = 0; g < plan.k; ++g) {
    for (int h = 0; h < plan.k; ++h) {
      if (g == h) continue;
      const int u = plan.aggregators[static_cast<std::size_t>(g)];
      const int v = plan.aggregators[static_cast<std::size_t>(h)];
      rp.routes[{u, v}] = best_path(m, u, v, all_nodes, min_gain);
    }
  }
  return rp;
}

}  // namespace geosync
