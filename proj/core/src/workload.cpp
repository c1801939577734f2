#include "geosync/workload.hpp"

#include <algorithm>
#include <cmath>

#include "geosync/error.hpp"
#include "geosync/rng.hpp"

namespace geosync {

std::map<std::uint64_t, std::uint64_t> genesis_versions() {
  return {{kAnchorKey, kAnchorVersion}};
}

nlohmann::json WorkloadConfig::to_json() const {
  return nlohmann::json{{"updates_per_node", updates_per_node},
                        {"payload_min", payload_min},
                        {"payload_max", payload_max},
                        {"conflict_ratio", conflict_ratio},
                        {"dup_ratio", dup_ratio},
                        {"null_ratio", null_ratio},
                        {"zipf_theta", zipf_theta},
                        {"key_space", key_space},
                        {"silent_nodes", std::vector<int>(silent_nodes.begin(), silent_nodes.end())}};
}

WorkloadConfig WorkloadConfig::from_json(const nlohmann::json& j) {
  WorkloadConfig c;
  c.updates_per_node = j.value("updates_per_node", c.updates_per_node);
  c.payload_min = j.value("payload_min", c.payload_min);
  c.payload_max = j.value("payload_max", c.payload_max);
  c.conflict_ratio = j.value("conflict_ratio", c.conflict_ratio);
  c.dup_ratio = j.value("dup_ratio", c.dup_ratio);
  c.null_ratio = j.value("null_ratio", c.null_ratio);
  c.zipf_theta = j.value("zipf_theta", c.zipf_theta);
  c.key_space = j.value("key_space", c.key_space);
  if (j.contains("silent_nodes"))
    for (const auto& v : j.at("silent_nodes")) c.silent_nodes.insert(v.get<int>());
  c.validate();
  return c;
}

void WorkloadConfig::validate() const {
  require(updates_per_node >= 0, "workload: negative updates_per_node");
  require(payload_min <= payload_max, "workload: payload_min > payload_max");
  auto ratio_ok = [](double r) { return r >= 0.0 && r <= 1.0; };
  require(ratio_ok(conflict_ratio) && ratio_ok(dup_ratio) && ratio_ok(null_ratio),
          "workload: ratios must be in [0,1]");
  require(conflict_ratio + dup_ratio + null_ratio <= 1.0,
          "workload: class ratios exceed 1");
  require(zipf_theta >= 0.0, "workload: negative zipf theta");
  require(key_space >= 1, "workload: key_space must be positive");
}

struct SampleCtx {
  CounterRng rng;
};

WorkloadGenerator::WorkloadGenerator(int n_nodes, WorkloadConfig cfg, std::uint64_t seed)
    : n_(n_nodes), cfg_(std::move(cfg)), seed_(seed) {
  require(n_ >= 1, "workload: need at least one node");
  cfg_.validate();
  conflict_acc_.assign(static_cast<std::size_t>(n_), 0.0);
  dup_acc_.assign(static_cast<std::size_t>(n_), 0.0);
  null_acc_.assign(static_cast<std::size_t>(n_), 0.0);

  if (cfg_.zipf_theta > 0.0) {
    zipf_cdf_.resize(static_cast<std::size_t>(cfg_.key_space));
    double total = 0.0;
    for (int r = 1; r <= cfg_.key_space; ++r)
      total += 1.0 / std::pow(static_cast<double>(r), cfg_.zipf_theta);
    double cum = 0.0;
    for (int r = 1; r <= cfg_.key_space; ++r) {
      cum += 1.0 / std::pow(static_cast<double>(r), cfg_.zipf_theta) / total;
      zipf_cdf_[static_cast<std::size_t>(r - 1)] = cum;
    }
    zipf_cdf_.back() = 1.0;
  }
}

std::uint64_t WorkloadGenerator::sample_key(SampleCtx& ctx) {
  if (zipf_cdf_.empty())
    return 1 + ctx.rng.integer(static_cast<std::uint64_t>(cfg_.key_space));
  const double u = ctx.rng.uniform();
  const auto it = std::lower_bound(zipf_cdf_.begin(), zipf_cdf_.end(), u);
  const auto rank = static_cast<std::uint64_t>(it - zipf_cdf_.begin());
  return 1 + rank;  // rank 0 is the hottest key
}

std::vector<Update> WorkloadGenerator::generate_node_round(int node, std::int64_t epoch) {
  require(node >= 0 && node < n_, "workload: node out of range");
  if (cfg_.silent_nodes.count(node)) return {};

  const int total = cfg_.updates_per_node;
  if (total == 0) return {};

  // Quota per class this round, error-diffused across rounds.
  auto take = [&](std::vector<double>& acc, double ratio) {
    acc[static_cast<std::size_t>(node)] += ratio * total;
    const int q = static_cast<int>(std::floor(acc[static_cast<std::size_t>(node)] + 1e-9));
    acc[static_cast<std::size_t>(node)] -= q;
    return q;
  };
  int n_null = take(null_acc_, cfg_.null_ratio);
  int n_dup = take(dup_acc_, cfg_.dup_ratio);
  int n_conflict = take(conflict_acc_, cfg_.conflict_ratio);
  int n_live = total - n_null - n_dup - n_conflict;
  if (n_live < 0) {  // quota rounding collision on tiny batches
    n_conflict += n_live;
    n_live = 0;
  }
  if (n_live == 0 && n_dup > 0) {  // a duplicate needs an original to repeat
    --n_dup;
    ++n_live;
  }

  SampleCtx ctx{CounterRng(seed_, 0x776f726bULL)
                    .substream(static_cast<std::uint64_t>(epoch))
                    .substream(static_cast<std::uint64_t>(node))};

  std::vector<Update> out;
  out.reserve(static_cast<std::size_t>(total));
  std::uint64_t seq = 0;
  auto next_txn = [&]() {
    return (static_cast<std::uint64_t>(node) << 40) |
           ((static_cast<std::uint64_t>(epoch) & 0xffffff) << 16) | (seq++ & 0xffff);
  };
  auto payload = [&]() {
    return cfg_.payload_min +
           ctx.rng.integer(cfg_.payload_max - cfg_.payload_min + 1);
  };

  std::vector<std::size_t> live_positions;
  for (int i = 0; i < n_live; ++i) {
    Update u;
    u.txn_id = next_txn();
    u.origin = node;
    u.epoch = epoch;
    u.write_set[sample_key(ctx)] = {static_cast<std::uint64_t>(epoch) + 2, payload()};
    u.finalize();
    live_positions.push_back(out.size());
    out.push_back(std::move(u));
  }
  for (int i = 0; i < n_conflict; ++i) {
    Update u;
    u.txn_id = next_txn();
    u.origin = node;
    u.epoch = epoch;
    u.read_set[kAnchorKey] = 0;  // stale against the genesis version
    u.write_set[sample_key(ctx)] = {static_cast<std::uint64_t>(epoch) + 2, payload()};
    u.finalize();
    out.push_back(std::move(u));
  }
  for (int i = 0; i < n_dup; ++i) {
    const auto pick = live_positions[static_cast<std::size_t>(
        ctx.rng.integer(live_positions.size()))];
    out.push_back(out[pick]);  // byte-identical repeat, same txn id
  }
  for (int i = 0; i < n_null; ++i) {
    Update u;
    u.txn_id = next_txn();
    u.origin = node;
    u.epoch = epoch;
    u.finalize();  // empty write set -> null
    out.push_back(std::move(u));
  }
  return out;
}

std::vector<std::vector<Update>> WorkloadGenerator::generate_round(std::int64_t epoch) {
  std::vector<std::vector<Update>> per_node;
  per_node.reserve(static_cast<std::size_t>(n_));
  for (int i = 0; i < n_; ++i) per_node.push_back(generate_node_round(i, epoch));
  return per_node;
}

}  // namespace geosync
