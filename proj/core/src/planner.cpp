#include "geosync/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "geosync/error.hpp"

namespace geosync {

std::vector<std::vector<int>> GroupPlan::members() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(k));
  for (int i = 0; i < static_cast<int>(assignment.size()); ++i)
    out[static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])].push_back(i);
  return out;
}

bool GroupPlan::is_aggregator(int node) const {
  for (int a : aggregators)
    if (a == node) return true;
  return false;
}

void GroupPlan::canonicalize() {
  std::vector<int> remap(static_cast<std::size_t>(k), -1);
  int next = 0;
  for (int& g : assignment) {
    if (remap[static_cast<std::size_t>(g)] < 0) remap[static_cast<std::size_t>(g)] = next++;
    g = remap[static_cast<std::size_t>(g)];
  }
  std::vector<int> aggs(static_cast<std::size_t>(k), -1);
  for (int g = 0; g < k; ++g)
    if (remap[static_cast<std::size_t>(g)] >= 0)
      aggs[static_cast<std::size_t>(remap[static_cast<std::size_t>(g)])] =
          aggregators[static_cast<std::size_t>(g)];
  aggregators = std::move(aggs);
}

nlohmann::json GroupPlan::to_json() const {
  nlohmann::json groups = nlohmann::json::array();
  auto mem = members();
  for (int g = 0; g < k; ++g)
    groups.push_back({{"aggregator", aggregators[static_cast<std::size_t>(g)]},
                      {"members", mem[static_cast<std::size_t>(g)]}});
  return nlohmann::json{{"k", k}, {"groups", std::move(groups)}, {"objective_ms", objective_ms}};
}

GroupPlan GroupPlan::from_json(const nlohmann::json& j) {
  GroupPlan plan;
  plan.k = j.at("k").get<int>();
  plan.objective_ms = j.value("objective_ms", 0.0);
  int n = 0;
  for (const auto& g : j.at("groups")) n += static_cast<int>(g.at("members").size());
  plan.assignment.assign(static_cast<std::size_t>(n), -1);
  int gid = 0;
  for (const auto& g : j.at("groups")) {
    plan.aggregators.push_back(g.at("aggregator").get<int>());
    for (const auto& mjson : g.at("members")) {
      const int node = mjson.get<int>();
      require(node >= 0 && node < n, "plan json: member out of range");
      require(plan.assignment[static_cast<std::size_t>(node)] < 0, "plan json: duplicate member");
      plan.assignment[static_cast<std::size_t>(node)] = gid;
    }
    ++gid;
  }
  require(gid == plan.k, "plan json: group count mismatch");
  for (int a : plan.assignment) require(a >= 0, "plan json: unassigned node");
  return plan;
}

void validate_plan(int n, const GroupPlan& plan) {
  require(plan.k >= 1 && plan.k <= n, "plan: k out of range");
  require(static_cast<int>(plan.assignment.size()) == n, "plan: assignment size mismatch");
  require(static_cast<int>(plan.aggregators.size()) == plan.k, "plan: aggregator count mismatch");
  std::vector<int> sizes(static_cast<std::size_t>(plan.k), 0);
  for (int i = 0; i < n; ++i) {
    const int g = plan.assignment[static_cast<std::size_t>(i)];
    require(g >= 0 && g < plan.k, "plan: node assigned to unknown group");
    ++sizes[static_cast<std::size_t>(g)];
  }
  for (int g = 0; g < plan.k; ++g) {
    require(sizes[static_cast<std::size_t>(g)] > 0, "plan: empty group");
    const int a = plan.aggregators[static_cast<std::size_t>(g)];
    require(a >= 0 && a < n, "plan: aggregator out of range");
    require(plan.assignment[static_cast<std::size_t>(a)] == g,
            "plan: aggregator is not a member of its group");
  }
}

double objective_T(const LatencyMatrix& m, const GroupPlan& plan) {
  validate_plan(m.size(), plan);
  double max_intra = 0.0;
  for (int i = 0; i < m.size(); ++i) {
    const int a = plan.aggregators[static_cast<std::size_t>(plan.group_of(i))];
    if (i == a) continue;
    max_intra = std::max(max_intra, m.bidir(i, a));
  }
  double inter = 0.0;
  for (int g = 0; g < plan.k; ++g)
    for (int h = 0; h < plan.k; ++h)
      if (g != h)
        inter = std::max(inter, m.at(plan.aggregators[static_cast<std::size_t>(g)],
                                     plan.aggregators[static_cast<std::size_t>(h)]));
  return max_intra + inter;
}

namespace {

/// DFS state for the exact solver. Nodes are assigned in index order; a node
/// may join any open group or open the next one (restricted growth keeps one
/// representative per group relabeling). cur_max[g][a] tracks the worst
/// member<->a latency seen so far in group g so both the partial lower bound
/// and the final aggregator search reuse it.
class ExactSolver {
 public:
  ExactSolver(const LatencyMatrix& m, int k) : m_(m), n_(m.size()), k_(k) {
    bidir_.resize(static_cast<std::size_t>(n_) * n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) bidir_[idx(i, j)] = m_.bidir(i, j);
    assignment_.assign(static_cast<std::size_t>(n_), -1);
    cur_max_.assign(static_cast<std::size_t>(k_), std::vector<double>(static_cast<std::size_t>(n_), 0.0));
    group_sizes_.assign(static_cast<std::size_t>(k_), 0);
  }

  GroupPlan run() {
    best_value_ = std::numeric_limits<double>::infinity();
    descend(0, 0);
    require(std::isfinite(best_value_), "exact solver: no feasible plan");
    GroupPlan plan;
    plan.k = k_;
    plan.assignment = best_assignment_;
    plan.aggregators = best_aggregators_;
    plan.objective_ms = best_value_;
    return plan;
  }

 private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * n_ + j; }

  double partial_lower_bound(int opened, int next_node) const {
    // For each open group: the aggregator must come from its current members
    // or the still-unassigned tail, and intra cost only grows with new
    // members, so min over those candidates of the current worst distance is
    // a valid bound on the group's final intra term.
    double bound = 0.0;
    for (int g = 0; g < opened; ++g) {
      double best_agg = std::numeric_limits<double>::infinity();
      const auto& row = cur_max_[static_cast<std::size_t>(g)];
      for (int a = 0; a < next_node; ++a)
        if (assignment_[static_cast<std::size_t>(a)] == g)
          best_agg = std::min(best_agg, row[static_cast<std::size_t>(a)]);
      for (int a = next_node; a < n_; ++a)
        best_agg = std::min(best_agg, row[static_cast<std::size_t>(a)]);
      bound = std::max(bound, best_agg);
    }
    return bound;
  }

  void descend(int node, int opened) {
    if (node == n_) {
      if (opened == k_) evaluate_leaf();
      return;
    }
    if (opened + (n_ - node) < k_) return;  // cannot open enough groups

    const int try_max = std::min(opened, k_ - 1);  // existing groups, then maybe a new one
    for (int g = 0; g <= try_max; ++g) {
      const bool opens = (g == opened);
      if (opens && opened >= k_) break;
      assignment_[static_cast<std::size_t>(node)] = g;
      ++group_sizes_[static_cast<std::size_t>(g)];
      auto saved = cur_max_[static_cast<std::size_t>(g)];
      auto& row = cur_max_[static_cast<std::size_t>(g)];
      for (int a = 0; a < n_; ++a)
        row[static_cast<std::size_t>(a)] =
            std::max(row[static_cast<std::size_t>(a)], bidir_[idx(node, a)]);

      const int next_opened = opened + (opens ? 1 : 0);
      if (partial_lower_bound(next_opened, node + 1) < best_value_)
        descend(node + 1, next_opened);

      cur_max_[static_cast<std::size_t>(g)] = std::move(saved);
      --group_sizes_[static_cast<std::size_t>(g)];
      assignment_[static_cast<std::size_t>(node)] = -1;
    }
  }

  void evaluate_leaf() {
    chosen_aggs_.assign(static_cast<std::size_t>(k_), -1);
    choose_aggregator(0, 0.0, 0.0);
  }

  void choose_aggregator(int g, double max_intra, double inter) {
    if (max_intra + inter >= best_value_) return;
    if (g == k_) {
      best_value_ = max_intra + inter;
      best_assignment_ = assignment_;
      best_aggregators_ = chosen_aggs_;
      return;
    }
    const auto& row = cur_max_[static_cast<std::size_t>(g)];
    for (int a = 0; a < n_; ++a) {
      if (assignment_[static_cast<std::size_t>(a)] != g) continue;
      const double intra = std::max(max_intra, row[static_cast<std::size_t>(a)]);
      double new_inter = inter;
      for (int h = 0; h < g; ++h) {
        const int b = chosen_aggs_[static_cast<std::size_t>(h)];
        new_inter = std::max(new_inter, bidir_[idx(a, b)]);
      }
      chosen_aggs_[static_cast<std::size_t>(g)] = a;
      choose_aggregator(g + 1, intra, new_inter);
      chosen_aggs_[static_cast<std::size_t>(g)] = -1;
    }
  }

  const LatencyMatrix& m_;
  int n_;
  int k_;
  std::vector<double> bidir_;
  std::vector<int> assignment_;
  std::vector<std::vector<double>> cur_max_;
  std::vector<int> group_sizes_;
  std::vector<int> chosen_aggs_;

  double best_value_ = std::numeric_limits<double>::infinity();
  std::vector<int> best_assignment_;
  std::vector<int> best_aggregators_;
};

}  // namespace

GroupPlan solve_exact(const LatencyMatrix& m, int k, const PlannerConfig& config) {
  const int n = m.size();
  require(k >= 1 && k <= n, "solve_exact: k out of range");
  require(n <= config.max_exact_n,
          "solve_exact: n exceeds max_exact_n, use the k-center solver");
  GroupPlan plan = ExactSolver(m, k).run();
  validate_plan(n, plan);
  return plan;
}

GroupPlan solve_kcenter(const LatencyMatrix& m, int k, std::uint64_t /*seed*/) {
  const int n = m.size();
  require(k >= 1 && k <= n, "solve_kcenter: k out of range");

  std::vector<int> centers;
  centers.reserve(static_cast<std::size_t>(k));
  {
    // Minimax start: the node whose farthest peer is nearest.
    int best = 0;
    double best_radius = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      double radius = 0.0;
      for (int j = 0; j < n; ++j)
        if (i != j) radius = std::max(radius, m.bidir(i, j));
      if (radius < best_radius) {
        best_radius = radius;
        best = i;
      }
    }
    centers.push_back(best);
  }

  std::vector<double> dist_to_nearest(static_cast<std::size_t>(n));
  std::vector<int> nearest_center(static_cast<std::size_t>(n));
  auto refresh = [&]() {
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int who = 0;
      for (int c = 0; c < static_cast<int>(centers.size()); ++c) {
        const double d = m.bidir(i, centers[static_cast<std::size_t>(c)]);
        if (d < best) {
          best = d;
          who = c;
        }
      }
      dist_to_nearest[static_cast<std::size_t>(i)] = best;
      nearest_center[static_cast<std::size_t>(i)] = who;
    }
  };
  refresh();

  while (static_cast<int>(centers.size()) < k) {
    int farthest = -1;
    double far_dist = -1.0;
    for (int i = 0; i < n; ++i) {
      if (std::find(centers.begin(), centers.end(), i) != centers.end()) continue;
      if (dist_to_nearest[static_cast<std::size_t>(i)] > far_dist) {
        far_dist = dist_to_nearest[static_cast<std::size_t>(i)];
        farthest = i;
      }
    }
    centers.push_back(farthest);
    refresh();
  }

  GroupPlan plan;
  plan.k = k;
  plan.assignment.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    plan.assignment[static_cast<std::size_t>(i)] = nearest_center[static_cast<std::size_t>(i)];
  plan.aggregators = centers;
  plan.canonicalize();
  plan.objective_ms = objective_T(m, plan);
  validate_plan(n, plan);
  return plan;
}

CostBreakdown cost_model(int n, int k) {
  require(n >= 1, "cost_model: n must be positive");
  require(k >= 1 && k <= n, "cost_model: k out of range");
  CostBreakdown c;
  c.intra_msgs = 2.0 * n * (static_cast<double>(n) / k - 1.0);
  c.inter_msgs = 2.0 * k * (k - 1.0);
  c.total_msgs = c.intra_msgs + c.inter_msgs;
  return c;
}

KStarResult k_star(int n) {
  require(n >= 2, "k_star: need n >= 2");
  KStarResult r;
  if (n < 4) {
    r.k_star = 1.0;
    r.lo = 1;
    r.hi = n;
    return r;
  }
  r.k_star = std::cbrt(static_cast<double>(n) * n / 2.0);
  const int fk = static_cast<int>(std::floor(r.k_star));
  if (n <= 13) {
    r.lo = n / 3;
    r.hi = (n + 1) / 2;
  } else if (n <= 25) {
    r.lo = fk;
    r.hi = (n + 1) / 2;
  } else if (n <= 50) {
    r.lo = fk;
    r.hi = n / 3;
  } else if (n <= 100) {
    r.lo = fk - 2;
    r.hi = n / 3;
  } else {
    r.lo = fk - 3;
    r.hi = n / 3;
  }
  r.lo = std::clamp(r.lo, 1, n);
  r.hi = std::clamp(r.hi, r.lo, n);
  return r;
}

GroupPlan auto_plan(const LatencyMatrix& m, const PlannerConfig& config, std::uint64_t seed) {
  const int n = m.size();
  if (n == 1) {
    GroupPlan p;
    p.k = 1;
    p.assignment = {0};
    p.aggregators = {0};
    p.objective_ms = 0.0;
    return p;
  }
  const KStarResult range = k_star(n);
  GroupPlan best;
  bool have = false;
  for (int k = range.lo; k <= std::min(range.hi, n); ++k) {
    GroupPlan plan = (n <= config.max_exact_n) ? solve_exact(m, k, config)
                                               : solve_kcenter(m, k, seed);
    if (!have || plan.objective_ms < best.objective_ms) {
      best = std::move(plan);
      have = true;
    }
  }
  return best;
}

bool should_regroup(const std::vector<std::vector<PairDeviation>>& history, double threshold,
                    int window) {
  require(window >= 1, "should_regroup: window must be >= 1");
  if (static_cast<int>(history.size()) < window) return false;

  auto key = [](const PairDeviation& d) {
    return (static_cast<std::int64_t>(d.src) << 32) | static_cast<std::uint32_t>(d.dst);
  };
  std::set<std::int64_t> sustained;
  bool first = true;
  for (std::size_t r = history.size() - static_cast<std::size_t>(window); r < history.size(); ++r) {
    std::set<std::int64_t> exceeded;
    for (const auto& d : history[r]) {
      if (d.baseline_ms <= 0.0) continue;  // undefined deviation, skip
      if (std::abs(d.observed_ms - d.baseline_ms) / d.baseline_ms > threshold)
        exceeded.insert(key(d));
    }
    if (first) {
      sustained = std::move(exceeded);
      first = false;
    } else {
      std::set<std::int64_t> inter;
      std::set_intersection(sustained.begin(), sustained.end(), exceeded.begin(), exceeded.end(),
                            std::inserter(inter, inter.begin()));
      sustained = std::move(inter);
    }
    if (sustained.empty()) return false;
  }
  return !sustained.empty();
}

}  // namespace geosync
