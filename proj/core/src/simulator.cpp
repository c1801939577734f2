#include "geosync/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <ostream>

#include "geosync/error.hpp"
#include "geosync/hash.hpp"
#include "geosync/metrics.hpp"
#include "geosync/trace_gen.hpp"

namespace geosync {

const char* to_string(SimMode m) { return m == SimMode::baseline ? "baseline" : "grouped"; }

SimMode sim_mode_from_string(const std::string& s) {
  if (s == "baseline") return SimMode::baseline;
  if (s == "grouped") return SimMode::grouped;
  throw ValidationError("unknown simulation mode: " + s);
}

nlohmann::json FailureEvent::to_json() const {
  nlohmann::json j{{"round", round}, {"kind", kind}};
  if (node >= 0) j["node"] = node;
  if (!nodes.empty()) j["nodes"] = nodes;
  return j;
}

FailureEvent FailureEvent::from_json(const nlohmann::json& j) {
  FailureEvent e;
  e.round = j.at("round").get<int>();
  e.kind = j.at("kind").get<std::string>();
  e.node = j.value("node", -1);
  if (j.contains("nodes")) e.nodes = j.at("nodes").get<std::vector<int>>();
  require(e.kind == "aggregator_crash" || e.kind == "node_crash" || e.kind == "partition" ||
              e.kind == "heal",
          "failure event: unknown kind '" + e.kind + "'");
  return e;
}

namespace {

nlohmann::json planner_config_to_json(const PlannerConfig& p) {
  return nlohmann::json{{"auto_k", p.auto_k},
                        {"fixed_k", p.fixed_k},
                        {"solver", p.solver == SolverKind::exact ? "exact" : "kcenter"},
                        {"max_exact_n", p.max_exact_n},
                        {"damping_threshold", p.damping_threshold},
                        {"damping_window", p.damping_window}};
}

PlannerConfig planner_config_from_json(const nlohmann::json& j) {
  PlannerConfig p;
  p.auto_k = j.value("auto_k", p.auto_k);
  p.fixed_k = j.value("fixed_k", p.fixed_k);
  const std::string solver = j.value("solver", std::string("exact"));
  require(solver == "exact" || solver == "kcenter", "planner config: unknown solver");
  p.solver = solver == "exact" ? SolverKind::exact : SolverKind::kcenter;
  p.max_exact_n = j.value("max_exact_n", p.max_exact_n);
  p.damping_threshold = j.value("damping_threshold", p.damping_threshold);
  p.damping_window = j.value("damping_window", p.damping_window);
  return p;
}

}  // namespace

nlohmann::json SimConfig::to_json() const {
  nlohmann::json fails = nlohmann::json::array();
  for (const auto& f : failures) fails.push_back(f.to_json());
  return nlohmann::json{{"rounds", rounds},
                        {"round_interval_ms", round_interval_ms},
                        {"mode", to_string(mode)},
                        {"planner", planner_config_to_json(planner)},
                        {"min_gain", min_gain},
                        {"workload", workload.to_json()},
                        {"failures", std::move(fails)},
                        {"retransmit_timeout_ms", retransmit_timeout_ms},
                        {"filter_enabled", filter_enabled},
                        {"seed", seed}};
}

SimConfig SimConfig::from_json(const nlohmann::json& j) {
  SimConfig c;
  c.rounds = j.value("rounds", c.rounds);
  c.round_interval_ms = j.value("round_interval_ms", c.round_interval_ms);
  c.mode = sim_mode_from_string(j.value("mode", std::string("grouped")));
  if (j.contains("planner")) c.planner = planner_config_from_json(j.at("planner"));
  c.min_gain = j.value("min_gain", c.min_gain);
  if (j.contains("workload")) c.workload = WorkloadConfig::from_json(j.at("workload"));
  if (j.contains("failures"))
    for (const auto& f : j.at("failures")) c.failures.push_back(FailureEvent::from_json(f));
  c.retransmit_timeout_ms = j.value("retransmit_timeout_ms", c.retransmit_timeout_ms);
  c.filter_enabled = j.value("filter_enabled", c.filter_enabled);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

void SimConfig::validate() const {
  require(rounds >= 1, "sim config: rounds must be >= 1");
  require(round_interval_ms > 0, "sim config: round interval must be positive");
  require(min_gain >= 0.0, "sim config: negative min_gain");
  require(retransmit_timeout_ms >= 0.0, "sim config: negative retransmit timeout");
  workload.validate();
  for (const auto& f : failures)
    require(f.round >= 0 && f.round < rounds, "sim config: failure round out of range");
}

namespace {

nlohmann::json filter_stats_to_json(const FilterStats& s) {
  return nlohmann::json{{"kept", s.kept},           {"redundant", s.redundant},
                        {"conflicting", s.conflicting}, {"null", s.null_count},
                        {"bytes_in", s.bytes_in},   {"bytes_out", s.bytes_out}};
}

FilterStats filter_stats_from_json(const nlohmann::json& j) {
  FilterStats s;
  s.kept = j.value("kept", 0ULL);
  s.redundant = j.value("redundant", 0ULL);
  s.conflicting = j.value("conflicting", 0ULL);
  s.null_count = j.value("null", 0ULL);
  s.bytes_in = j.value("bytes_in", 0ULL);
  s.bytes_out = j.value("bytes_out", 0ULL);
  return s;
}

}  // namespace

nlohmann::json RoundResult::to_json() const {
  nlohmann::json link_arr = nlohmann::json::array();
  for (const auto& [key, stat] : links)
    link_arr.push_back({key.first, key.second, stat.msgs, stat.bytes});
  return nlohmann::json{{"round", round},
                        {"t_ms", t_ms},
                        {"mode", mode},
                        {"makespan_ms", makespan_ms},
                        {"stage_ms", {gather_ms, inter_ms, scatter_ms}},
                        {"planner_objective_ms", planner_objective_ms},
                        {"plan_index", plan_index},
                        {"per_node_msgs", per_node_msgs},
                        {"links", std::move(link_arr)},
                        {"filter", filter_stats_to_json(filter)},
                        {"bytes_total", bytes_total},
                        {"bytes_inter", bytes_inter},
                        {"events", events}};
}

RoundResult RoundResult::from_json(const nlohmann::json& j) {
  RoundResult r;
  r.round = j.at("round").get<int>();
  r.t_ms = j.value("t_ms", static_cast<std::int64_t>(0));
  r.mode = j.value("mode", std::string());
  r.makespan_ms = j.at("makespan_ms").get<double>();
  const auto& st = j.at("stage_ms");
  r.gather_ms = st.at(0).get<double>();
  r.inter_ms = st.at(1).get<double>();
  r.scatter_ms = st.at(2).get<double>();
  r.planner_objective_ms = j.value("planner_objective_ms", 0.0);
  r.plan_index = j.value("plan_index", -1);
  r.per_node_msgs = j.value("per_node_msgs", std::vector<std::uint64_t>{});
  if (j.contains("links"))
    for (const auto& l : j.at("links"))
      r.links[{l.at(0).get<int>(), l.at(1).get<int>()}] = {l.at(2).get<std::uint64_t>(),
                                                           l.at(3).get<std::uint64_t>()};
  if (j.contains("filter")) r.filter = filter_stats_from_json(j.at("filter"));
  r.bytes_total = j.value("bytes_total", 0ULL);
  r.bytes_inter = j.value("bytes_inter", 0ULL);
  r.events = j.value("events", std::vector<std::string>{});
  return r;
}

nlohmann::json EpochRecord::to_json() const {
  nlohmann::json digs = nlohmann::json::array();
  for (std::size_t i = 0; i < digests.size(); ++i)
    digs.push_back(closed_round[i] >= 0 ? hex64(digests[i]) : "");
  return nlohmann::json{{"epoch", epoch},
                        {"digests", std::move(digs)},
                        {"closed_round", closed_round},
                        {"all_closed", all_closed},
                        {"converged", converged}};
}

EpochRecord EpochRecord::from_json(const nlohmann::json& j) {
  EpochRecord e;
  e.epoch = j.at("epoch").get<std::int64_t>();
  e.closed_round = j.at("closed_round").get<std::vector<int>>();
  for (const auto& d : j.at("digests")) {
    const std::string s = d.get<std::string>();
    e.digests.push_back(s.empty() ? 0 : std::stoull(s, nullptr, 16));
  }
  e.all_closed = j.value("all_closed", false);
  e.converged = j.value("converged", false);
  return e;
}

nlohmann::json SimReport::to_json() const {
  nlohmann::json plan_arr = nlohmann::json::array();
  for (const auto& p : plans) plan_arr.push_back(p.to_json());
  nlohmann::json round_arr = nlohmann::json::array();
  for (const auto& r : rounds) round_arr.push_back(r.to_json());
  nlohmann::json epoch_arr = nlohmann::json::array();
  for (const auto& e : epochs) epoch_arr.push_back(e.to_json());
  return nlohmann::json{
      {"config", config.to_json()},
      {"n", n},
      {"plans", std::move(plan_arr)},
      {"rounds", std::move(round_arr)},
      {"totals",
       {{"msgs", totals.msgs},
        {"bytes", totals.bytes},
        {"bytes_inter", totals.bytes_inter},
        {"filtered_bytes", totals.filtered_bytes}}},
      {"makespan",
       {{"mean", makespan.mean},
        {"p50", makespan.p50},
        {"p90", makespan.p90},
        {"p99", makespan.p99},
        {"min", makespan.min},
        {"max", makespan.max}}},
      {"epochs", std::move(epoch_arr)},
      {"visibility",
       {{"max_extra_ms", max_extra_visibility_ms},
        {"bound_ms", visibility_bound_ms},
        {"late_deliveries", late_deliveries}}},
      {"recovery", {{"msgs", recovery_msgs}, {"bytes", recovery_bytes}}},
      {"liveness", {{"stall_rounds", stall_rounds}}},
      {"final_state_digest", hex64(final_state_digest)},
      {"all_converged", all_converged}};
}

SimReport SimReport::from_json(const nlohmann::json& j) {
  SimReport r;
  r.config = SimConfig::from_json(j.at("config"));
  r.n = j.at("n").get<int>();
  for (const auto& p : j.at("plans")) r.plans.push_back(GroupPlan::from_json(p));
  for (const auto& rr : j.at("rounds")) r.rounds.push_back(RoundResult::from_json(rr));
  const auto& t = j.at("totals");
  r.totals = {t.at("msgs").get<std::uint64_t>(), t.at("bytes").get<std::uint64_t>(),
              t.at("bytes_inter").get<std::uint64_t>(), t.at("filtered_bytes").get<std::uint64_t>()};
  const auto& mk = j.at("makespan");
  r.makespan = {mk.at("mean").get<double>(), mk.at("p50").get<double>(),
                mk.at("p90").get<double>(),  mk.at("p99").get<double>(),
                mk.at("min").get<double>(),  mk.at("max").get<double>()};
  for (const auto& e : j.at("epochs")) r.epochs.push_back(EpochRecord::from_json(e));
  const auto& vis = j.at("visibility");
  r.max_extra_visibility_ms = vis.at("max_extra_ms").get<double>();
  r.visibility_bound_ms = vis.at("bound_ms").get<double>();
  r.late_deliveries = vis.at("late_deliveries").get<std::uint64_t>();
  r.recovery_msgs = j.at("recovery").at("msgs").get<std::uint64_t>();
  r.recovery_bytes = j.at("recovery").at("bytes").get<std::uint64_t>();
  r.stall_rounds = j.at("liveness").at("stall_rounds").get<int>();
  r.final_state_digest = std::stoull(j.at("final_state_digest").get<std::string>(), nullptr, 16);
  r.all_converged = j.value("all_converged", false);
  return r;
}

void SimReport::to_csv(std::ostream& out) const {
  out << "round,makespan_ms,gather_ms,inter_ms,scatter_ms,msgs,bytes_in,bytes_out\n";
  char buf[256];
  for (const auto& r : rounds) {
    std::uint64_t msgs = 0;
    for (const auto& [k, s] : r.links) msgs += s.msgs;
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%.6f,%llu,%llu,%llu\n", r.round,
                  r.makespan_ms, r.gather_ms, r.inter_ms, r.scatter_ms,
                  static_cast<unsigned long long>(msgs),
                  static_cast<unsigned long long>(r.filter.bytes_in),
                  static_cast<unsigned long long>(r.filter.bytes_out));
    out << buf;
  }
}

// ---------------------------------------------------------------------------
// Round execution
// ---------------------------------------------------------------------------

namespace {

enum class WithholdReason { crash, partition };

struct Withheld {
  int dest = -1;
  int origin = -1;
  Update update;
  WithholdReason reason = WithholdReason::crash;
};

struct ExecOutput {
  RoundResult round;
  std::map<int, std::vector<Update>> delivered;  // dest -> updates (origin != dest)
  std::vector<Withheld> withheld;
  std::vector<std::vector<Update>> kept_per_group;  // grouped rounds only
};

struct ExecContext {
  const std::set<int>* dead = nullptr;      // down this round: no traffic at all
  const std::set<int>* isolated = nullptr;  // partition side
  bool alive(int x) const { return !dead || !dead->count(x); }
  int side(int x) const { return isolated && isolated->count(x) ? 1 : 0; }
  bool connected(int u, int v) const { return alive(u) && alive(v) && side(u) == side(v); }
};

void add_link(RoundResult& r, int src, int dst, std::uint64_t bytes) {
  auto& stat = r.links[{src, dst}];
  stat.msgs += 1;
  stat.bytes += bytes;
}

std::uint64_t batch_bytes(const std::vector<Update>& batch) {
  std::uint64_t b = 0;
  for (const auto& u : batch) b += u.payload_bytes();
  return b;
}

void finish_accounting(RoundResult& r, int n) {
  r.per_node_msgs.assign(static_cast<std::size_t>(n), 0);
  r.bytes_total = 0;
  for (const auto& [key, stat] : r.links) {
    r.per_node_msgs[static_cast<std::size_t>(key.first)] += stat.msgs;
    r.per_node_msgs[static_cast<std::size_t>(key.second)] += stat.msgs;
    r.bytes_total += stat.bytes;
  }
  const std::uint64_t bound = 2ULL * (static_cast<std::uint64_t>(n) - 1);
  for (int i = 0; i < n; ++i)
    if (r.per_node_msgs[static_cast<std::size_t>(i)] > bound)
      throw InvariantViolation("round " + std::to_string(r.round) + ": node " + std::to_string(i) +
                               " exceeded the per-round message bound");
}

ExecOutput exec_direct(const LatencyMatrix& m, const std::vector<std::vector<Update>>& per_node,
                       const ExecContext& ctx) {
  const int n = m.size();
  ExecOutput out;
  out.round.mode = "baseline";
  double makespan = 0.0;
  for (int u = 0; u < n; ++u) {
    if (!ctx.alive(u)) continue;
    const auto& batch = per_node[static_cast<std::size_t>(u)];
    const std::uint64_t bytes = batch_bytes(batch);
    for (int v = 0; v < n; ++v) {
      if (u == v) continue;
      if (!ctx.alive(v)) {
        for (const auto& up : batch) out.withheld.push_back({v, u, up, WithholdReason::crash});
        continue;
      }
      if (ctx.side(u) != ctx.side(v)) {
        for (const auto& up : batch) out.withheld.push_back({v, u, up, WithholdReason::partition});
        continue;
      }
      add_link(out.round, u, v, bytes);
      makespan = std::max(makespan, m.at(u, v));
      auto& dst = out.delivered[v];
      dst.insert(dst.end(), batch.begin(), batch.end());
    }
  }
  out.round.inter_ms = makespan;  // single direct stage
  out.round.makespan_ms = makespan;
  finish_accounting(out.round, n);
  return out;
}

ExecOutput exec_grouped(const LatencyMatrix& m, const GroupPlan& plan, const RoutePlan& routes,
                        const std::vector<std::vector<Update>>& per_node,
                        std::map<int, AggregatorState>& agg_states, bool filter_enabled,
                        const ExecContext& ctx) {
  const int n = m.size();
  validate_plan(n, plan);
  ExecOutput out;
  out.round.mode = "grouped";
  const auto members = plan.members();

  // Stage 1: gather. Connected members feed the aggregator in node order.
  double gather = 0.0;
  std::vector<std::vector<Update>> agg_input(static_cast<std::size_t>(plan.k));
  for (int g = 0; g < plan.k; ++g) {
    const int a = plan.aggregators[static_cast<std::size_t>(g)];
    require(ctx.alive(a), "grouped round: dead aggregator must fall back to direct");
    for (int mnode : members[static_cast<std::size_t>(g)]) {
      const auto& batch = per_node[static_cast<std::size_t>(mnode)];
      if (mnode == a) {
        auto& in = agg_input[static_cast<std::size_t>(g)];
        in.insert(in.end(), batch.begin(), batch.end());
        continue;
      }
      if (!ctx.alive(mnode)) continue;  // down: generated nothing
      if (!ctx.connected(mnode, a)) {
        // Cannot reach its aggregator this round; everyone gets it post-heal.
        for (int v = 0; v < n; ++v)
          if (v != mnode)
            for (const auto& up : batch)
              out.withheld.push_back({v, mnode, up, WithholdReason::partition});
        continue;
      }
      add_link(out.round, mnode, a, batch_bytes(batch));
      gather = std::max(gather, m.at(mnode, a));
      auto& in = agg_input[static_cast<std::size_t>(g)];
      in.insert(in.end(), batch.begin(), batch.end());
    }
  }

  // Filter at each aggregator.
  std::vector<std::vector<Update>> kept(static_cast<std::size_t>(plan.k));
  std::vector<std::uint64_t> kept_bytes(static_cast<std::size_t>(plan.k), 0);
  for (int g = 0; g < plan.k; ++g) {
    const int a = plan.aggregators[static_cast<std::size_t>(g)];
    const auto& input = agg_input[static_cast<std::size_t>(g)];
    if (filter_enabled) {
      FilterResult fr = aggregate_and_filter(input, agg_states[a]);
      if (fr.stats.total() != input.size())
        throw InvariantViolation("filter stats do not add up");
      kept[static_cast<std::size_t>(g)] = std::move(fr.kept);
      out.round.filter += fr.stats;
    } else {
      kept[static_cast<std::size_t>(g)] = input;
      FilterStats s;
      s.kept = input.size();
      s.bytes_in = s.bytes_out = batch_bytes(input);
      out.round.filter += s;
    }
    kept_bytes[static_cast<std::size_t>(g)] = batch_bytes(kept[static_cast<std::size_t>(g)]);
  }

  // Stage 2: inter-aggregator exchange over the route plan. A relay detour is
  // only usable when the relay can reach both ends this round.
  double inter = 0.0;
  std::vector<std::vector<int>> reaches(static_cast<std::size_t>(plan.k));  // groups seen by agg h
  for (int h = 0; h < plan.k; ++h) reaches[static_cast<std::size_t>(h)].push_back(h);
  for (int g = 0; g < plan.k; ++g) {
    for (int h = 0; h < plan.k; ++h) {
      if (g == h) continue;
      const int a = plan.aggregators[static_cast<std::size_t>(g)];
      const int b = plan.aggregators[static_cast<std::size_t>(h)];
      if (!ctx.connected(a, b)) continue;  // buffered via the scatter stage below
      double eff = m.at(a, b);
      if (const RouteEntry* e = routes.find(a, b)) {
        if (e->direct() || (ctx.connected(a, e->relay) && ctx.connected(e->relay, b)))
          eff = e->effective_ms;
      }
      add_link(out.round, a, b, kept_bytes[static_cast<std::size_t>(g)]);
      out.round.bytes_inter += kept_bytes[static_cast<std::size_t>(g)];
      inter = std::max(inter, eff);
      reaches[static_cast<std::size_t>(h)].push_back(g);
    }
  }

  // Stage 3: scatter merged results to members; origins never receive their
  // own updates back.
  double scatter = 0.0;
  for (int h = 0; h < plan.k; ++h) {
    const int b = plan.aggregators[static_cast<std::size_t>(h)];
    std::uint64_t reach_bytes = 0;
    for (int g : reaches[static_cast<std::size_t>(h)]) reach_bytes += kept_bytes[static_cast<std::size_t>(g)];
    for (int v : members[static_cast<std::size_t>(h)]) {
      if (v == b) continue;
      if (!ctx.alive(v)) {
        for (int g : reaches[static_cast<std::size_t>(h)])
          for (const auto& up : kept[static_cast<std::size_t>(g)])
            if (up.origin != v) out.withheld.push_back({v, up.origin, up, WithholdReason::crash});
        continue;
      }
      if (!ctx.connected(b, v)) {
        for (int g : reaches[static_cast<std::size_t>(h)])
          for (const auto& up : kept[static_cast<std::size_t>(g)])
            if (up.origin != v)
              out.withheld.push_back({v, up.origin, up, WithholdReason::partition});
        continue;
      }
      std::uint64_t own = 0;
      for (const auto& up : kept[static_cast<std::size_t>(h)])
        if (up.origin == v) own += up.payload_bytes();
      add_link(out.round, b, v, reach_bytes - own);
      scatter = std::max(scatter, m.at(b, v));
      auto& dst = out.delivered[v];
      for (int g : reaches[static_cast<std::size_t>(h)])
        for (const auto& up : kept[static_cast<std::size_t>(g)])
          if (up.origin != v) dst.push_back(up);
    }
    // The aggregator itself consumes everything it reached.
    if (ctx.alive(b)) {
      auto& dst = out.delivered[b];
      for (int g : reaches[static_cast<std::size_t>(h)])
        for (const auto& up : kept[static_cast<std::size_t>(g)])
          if (up.origin != b) dst.push_back(up);
    }
  }

  // Updates kept by group g but unreachable for group h's aggregator cross a
  // cut: buffer them for h's whole group.
  for (int h = 0; h < plan.k; ++h) {
    const int b = plan.aggregators[static_cast<std::size_t>(h)];
    for (int g = 0; g < plan.k; ++g) {
      if (g == h) continue;
      const int a = plan.aggregators[static_cast<std::size_t>(g)];
      if (ctx.connected(a, b)) continue;
      for (int v : members[static_cast<std::size_t>(h)]) {
        if (!ctx.alive(v)) continue;  // crash withholding already covered scatter
        for (const auto& up : kept[static_cast<std::size_t>(g)])
          if (up.origin != v) out.withheld.push_back({v, up.origin, up, WithholdReason::partition});
      }
    }
  }

  out.round.gather_ms = gather;
  out.round.inter_ms = inter;
  out.round.scatter_ms = scatter;
  out.round.makespan_ms = gather + inter + scatter;
  out.kept_per_group = kept;
  finish_accounting(out.round, n);
  return out;
}

}  // namespace

RoundResult baseline_round(const LatencyMatrix& m,
                           const std::vector<std::vector<Update>>& per_node_updates) {
  require(m.size() >= 2, "baseline_round: need at least 2 nodes");
  require(per_node_updates.size() == static_cast<std::size_t>(m.size()),
          "baseline_round: one batch per node required");
  ExecContext ctx;
  return exec_direct(m, per_node_updates, ctx).round;
}

RoundResult grouped_round(const LatencyMatrix& m, const GroupPlan& plan, const RoutePlan& routes,
                          const std::vector<std::vector<Update>>& per_node_updates,
                          std::map<int, AggregatorState>& agg_states, bool filter_enabled,
                          std::vector<Update>* kept_global) {
  require(per_node_updates.size() == static_cast<std::size_t>(m.size()),
          "grouped_round: one batch per node required");
  ExecContext ctx;
  ExecOutput out = exec_grouped(m, plan, routes, per_node_updates, agg_states, filter_enabled, ctx);
  if (kept_global) {
    kept_global->clear();
    for (auto& kg : out.kept_per_group)
      kept_global->insert(kept_global->end(), kg.begin(), kg.end());
  }
  return out.round;
}

// ---------------------------------------------------------------------------
// Trace-driven simulation loop
// ---------------------------------------------------------------------------

namespace {

struct RetransmitItem {
  int dest = -1;
  int origin = -1;
  std::int64_t epoch = 0;
  int available_round = 0;
  Update update;
};

struct PartitionItem {
  int dest = -1;
  int origin = -1;
  std::int64_t epoch = 0;
  Update update;
};

std::map<std::uint64_t, std::uint64_t> versions_of(const CommittedMap& committed) {
  std::map<std::uint64_t, std::uint64_t> v;
  for (const auto& [key, val] : committed) v[key] = val.version;
  return v;
}

}  // namespace

SimReport run_simulation(const LatencyTrace& trace, const SimConfig& config,
                         const GroupPlan* initial_plan) {
  config.validate();
  trace.validate();
  const int n = trace.node_count();
  require(n >= 2, "simulation: need at least 2 nodes");

  SimReport report;
  report.config = config;
  report.n = n;

  WorkloadGenerator workload(n, config.workload, config.seed);

  // Replicas start from a shared genesis so stale reads are definable from
  // the first epoch.
  std::vector<ReplicaState> replicas(static_cast<std::size_t>(n));
  for (auto& r : replicas)
    r.committed[kAnchorKey] = CommittedValue{kAnchorVersion, /*origin=*/-1, /*txn_id=*/0, 0};

  std::map<int, AggregatorState> agg_states;

  report.epochs.resize(static_cast<std::size_t>(config.rounds));
  for (int e = 0; e < config.rounds; ++e) {
    report.epochs[static_cast<std::size_t>(e)].epoch = e;
    report.epochs[static_cast<std::size_t>(e)].digests.assign(static_cast<std::size_t>(n), 0);
    report.epochs[static_cast<std::size_t>(e)].closed_round.assign(static_cast<std::size_t>(n), -1);
  }

  std::vector<std::map<std::int64_t, std::vector<Update>>> arrivals(static_cast<std::size_t>(n));
  std::vector<std::map<std::int64_t, int>> outstanding(static_cast<std::size_t>(n));
  std::vector<std::int64_t> next_close(static_cast<std::size_t>(n), 0);
  std::vector<RetransmitItem> retransmits;
  std::vector<PartitionItem> partition_backlog;
  std::optional<std::set<int>> active_partition;

  GroupPlan plan;
  bool have_plan = false;
  bool force_replan = false;
  LatencyMatrix plan_matrix;
  int plan_index = -1;
  std::deque<std::vector<PairDeviation>> history;

  double delta_wan = 0.0;

  auto make_plan = [&](const LatencyMatrix& m, std::vector<std::string>& events,
                       const char* reason) {
    if (config.planner.auto_k) {
      plan = auto_plan(m, config.planner, config.seed);
    } else if (config.planner.solver == SolverKind::exact) {
      plan = solve_exact(m, config.planner.fixed_k, config.planner);
    } else {
      plan = solve_kcenter(m, config.planner.fixed_k, config.seed);
    }
    plan_matrix = m;
    report.plans.push_back(plan);
    plan_index = static_cast<int>(report.plans.size()) - 1;
    history.clear();
    have_plan = true;
    events.push_back(reason);
  };

  auto close_ready_epochs = [&](std::int64_t limit, int at_round) {
    for (int v = 0; v < n; ++v) {
      auto& nc = next_close[static_cast<std::size_t>(v)];
      while (nc <= limit) {
        auto& out_map = outstanding[static_cast<std::size_t>(v)];
        auto it = out_map.find(nc);
        if (it != out_map.end() && it->second > 0) break;
        if (it != out_map.end()) out_map.erase(it);

        auto& arr_map = arrivals[static_cast<std::size_t>(v)];
        std::vector<Update> arr;
        if (auto ait = arr_map.find(nc); ait != arr_map.end()) {
          arr = std::move(ait->second);
          arr_map.erase(ait);
        }
        auto& state = replicas[static_cast<std::size_t>(v)];
        // OCC validation against the pre-epoch commit state; stale reads abort
        // on every replica identically.
        const auto base_versions = versions_of(state.committed);
        std::vector<Update> valid;
        valid.reserve(arr.size());
        for (auto& u : arr)
          if (!read_set_stale(u, base_versions)) valid.push_back(std::move(u));
        EpochOutcome outcome = epoch_close(state, valid, {});

        auto& rec = report.epochs[static_cast<std::size_t>(nc)];
        rec.digests[static_cast<std::size_t>(v)] = outcome.snapshot_digest;
        rec.closed_round[static_cast<std::size_t>(v)] = at_round;
        for (int w = 0; w < n; ++w) {
          if (w == v || rec.closed_round[static_cast<std::size_t>(w)] < 0) continue;
          if (rec.digests[static_cast<std::size_t>(w)] != outcome.snapshot_digest)
            throw InvariantViolation("epoch " + std::to_string(nc) +
                                     ": replica digests diverged");
        }
        ++nc;
      }
    }
  };

  for (int r = 0; r < config.rounds; ++r) {
    const std::int64_t t = static_cast<std::int64_t>(r) * config.round_interval_ms;
    const LatencyMatrix& m = trace.at_time(t);
    require(m.size() == n, "simulation: trace matrix size changed");
    delta_wan = std::max(delta_wan, m.max_off_diagonal());

    std::vector<std::string> events;
    int crash_node = -1;
    int agg_crash_node = -1;
    for (const auto& ev : config.failures) {
      if (ev.round != r) continue;
      if (ev.kind == "aggregator_crash") {
        agg_crash_node = ev.node;
        events.push_back("aggregator_crash node=" + std::to_string(ev.node));
      } else if (ev.kind == "node_crash") {
        crash_node = ev.node;
        events.push_back("node_crash node=" + std::to_string(ev.node));
      } else if (ev.kind == "partition") {
        active_partition = std::set<int>(ev.nodes.begin(), ev.nodes.end());
        events.push_back("partition size=" + std::to_string(ev.nodes.size()));
      } else if (ev.kind == "heal") {
        if (active_partition) {
          for (auto& item : partition_backlog) {
            const std::uint64_t bytes = item.update.payload_bytes();
            arrivals[static_cast<std::size_t>(item.dest)][item.epoch].push_back(
                std::move(item.update));
            --outstanding[static_cast<std::size_t>(item.dest)][item.epoch];
            ++report.recovery_msgs;
            report.recovery_bytes += bytes;
          }
          partition_backlog.clear();
          active_partition.reset();
          events.push_back("heal");
        }
      }
    }

    // Due retransmissions: timeout tau after the missed round, direct path.
    for (auto it = retransmits.begin(); it != retransmits.end();) {
      if (it->available_round != r) {
        ++it;
        continue;
      }
      const double extra = config.retransmit_timeout_ms + m.at(it->origin, it->dest);
      report.max_extra_visibility_ms = std::max(report.max_extra_visibility_ms, extra);
      ++report.late_deliveries;
      ++report.recovery_msgs;
      report.recovery_bytes += it->update.payload_bytes();
      arrivals[static_cast<std::size_t>(it->dest)][it->epoch].push_back(std::move(it->update));
      --outstanding[static_cast<std::size_t>(it->dest)][it->epoch];
      it = retransmits.erase(it);
    }

    close_ready_epochs(r - 1, r);

    if (config.mode == SimMode::grouped) {
      if (!have_plan) {
        if (initial_plan) {
          plan = *initial_plan;
          validate_plan(n, plan);
          plan.objective_ms = objective_T(m, plan);
          plan_matrix = m;
          report.plans.push_back(plan);
          plan_index = 0;
          have_plan = true;
          events.push_back("initial_plan(file)");
        } else {
          make_plan(m, events, "initial_plan");
        }
      } else if (force_replan) {
        make_plan(m, events, "replan_after_failure");
        force_replan = false;
      } else {
        std::vector<PairDeviation> obs;
        obs.reserve(static_cast<std::size_t>(n) * (n - 1));
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            if (i != j) obs.push_back({i, j, plan_matrix.at(i, j), m.at(i, j)});
        history.push_back(std::move(obs));
        while (static_cast<int>(history.size()) > config.planner.damping_window)
          history.pop_front();
        std::vector<std::vector<PairDeviation>> hist(history.begin(), history.end());
        if (should_regroup(hist, config.planner.damping_threshold,
                           config.planner.damping_window)) {
          make_plan(m, events, "regroup");
        }
      }
    }

    std::set<int> dead;
    if (crash_node >= 0 && crash_node < n) dead.insert(crash_node);

    std::vector<std::vector<Update>> per_node(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v)
      if (!dead.count(v)) per_node[static_cast<std::size_t>(v)] = workload.generate_node_round(v, r);

    ExecContext ctx;
    ctx.dead = &dead;
    ctx.isolated = active_partition ? &*active_partition : nullptr;

    bool fallback = false;
    if (config.mode == SimMode::grouped) {
      if (agg_crash_node >= 0 && plan.is_aggregator(agg_crash_node)) fallback = true;
      if (crash_node >= 0 && plan.is_aggregator(crash_node)) fallback = true;
    }

    ExecOutput out;
    if (config.mode == SimMode::baseline) {
      out = exec_direct(m, per_node, ctx);
    } else if (fallback) {
      out = exec_direct(m, per_node, ctx);
      out.round.mode = "fallback_direct";
      events.push_back("fallback_direct");
      force_replan = true;
    } else {
      for (int g = 0; g < plan.k; ++g) {
        const int a = plan.aggregators[static_cast<std::size_t>(g)];
        agg_states[a].advance_epoch(r, versions_of(replicas[static_cast<std::size_t>(a)].committed));
      }
      RoutePlan routes = build_route_plan(m, plan, config.min_gain);
      out = exec_grouped(m, plan, routes, per_node, agg_states, config.filter_enabled, ctx);
      out.round.planner_objective_ms = objective_T(m, plan);
      out.round.plan_index = plan_index;
    }
    if (crash_node >= 0) force_replan = true;

    // Deliveries: own batch plus whatever the round transported.
    for (int v = 0; v < n; ++v) {
      auto& batch = per_node[static_cast<std::size_t>(v)];
      if (!batch.empty()) {
        auto& dst = arrivals[static_cast<std::size_t>(v)][r];
        dst.insert(dst.end(), batch.begin(), batch.end());
      }
    }
    for (auto& [dest, ups] : out.delivered) {
      auto& dst = arrivals[static_cast<std::size_t>(dest)][r];
      for (auto& u : ups) dst.push_back(std::move(u));
    }
    for (auto& w : out.withheld) {
      ++outstanding[static_cast<std::size_t>(w.dest)][r];
      if (w.reason == WithholdReason::crash) {
        retransmits.push_back({w.dest, w.origin, r, r + 1, std::move(w.update)});
      } else {
        partition_backlog.push_back({w.dest, w.origin, r, std::move(w.update)});
      }
    }

    close_ready_epochs(r, r);

    out.round.round = r;
    out.round.t_ms = t;
    out.round.events = std::move(events);
    report.totals.msgs += [&] {
      std::uint64_t s = 0;
      for (const auto& [k, st] : out.round.links) s += st.msgs;
      return s;
    }();
    report.totals.bytes += out.round.bytes_total;
    report.totals.bytes_inter += out.round.bytes_inter;
    report.totals.filtered_bytes += out.round.filter.bytes_in - out.round.filter.bytes_out;
    report.rounds.push_back(std::move(out.round));

    bool stalled = false;
    for (int v = 0; v < n; ++v)
      if (next_close[static_cast<std::size_t>(v)] <= r) stalled = true;
    if (stalled) ++report.stall_rounds;
  }

  report.visibility_bound_ms = visibility_delay_bound(config.retransmit_timeout_ms, delta_wan);
  if (report.max_extra_visibility_ms > report.visibility_bound_ms)
    throw InvariantViolation("visibility delay exceeded tau + delta_wan");

  report.all_converged = true;
  for (auto& rec : report.epochs) {
    rec.all_closed = true;
    rec.converged = true;
    std::uint64_t expect = 0;
    bool first = true;
    for (int v = 0; v < n; ++v) {
      if (rec.closed_round[static_cast<std::size_t>(v)] < 0) {
        rec.all_closed = false;
        continue;
      }
      if (first) {
        expect = rec.digests[static_cast<std::size_t>(v)];
        first = false;
      } else if (rec.digests[static_cast<std::size_t>(v)] != expect) {
        rec.converged = false;
      }
    }
    if (!rec.all_closed || !rec.converged) report.all_converged = false;
  }
  report.final_state_digest = replicas[0].digest();

  std::vector<double> spans;
  spans.reserve(report.rounds.size());
  for (const auto& rr : report.rounds) spans.push_back(rr.makespan_ms);
  report.makespan.mean = 0.0;
  for (double s : spans) report.makespan.mean += s;
  report.makespan.mean /= static_cast<double>(spans.size());
  report.makespan.p50 = percentile(spans, 0.50);
  report.makespan.p90 = percentile(spans, 0.90);
  report.makespan.p99 = percentile(spans, 0.99);
  report.makespan.min = *std::min_element(spans.begin(), spans.end());
  report.makespan.max = *std::max_element(spans.begin(), spans.end());
  return report;
}

}  // namespace geosync
