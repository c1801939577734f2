#include <doctest.h>

#include "geosync/crdt.hpp"
#include "geosync/error.hpp"
#include "geosync/filter.hpp"
#include "geosync/workload.hpp"
#include "support/generators.hpp"

using namespace geosync;

namespace {

Update make_update(std::uint64_t txn, int origin, std::int64_t epoch, std::uint64_t key,
                   std::uint64_t version, std::uint64_t bytes) {
  Update u;
  u.txn_id = txn;
  u.origin = origin;
  u.epoch = epoch;
  if (bytes > 0) u.write_set[key] = {version, bytes};
  u.finalize();
  return u;
}

// Replica-side epoch commit: OCC-validate against the pre-epoch state, then
// merge survivors. The equivalence tests compare filtered vs unfiltered
// inputs through this one path.
ReplicaState close_with_validation(ReplicaState s, const std::vector<Update>& arrivals) {
  std::map<std::uint64_t, std::uint64_t> versions;
  for (const auto& [k, v] : s.committed) versions[k] = v.version;
  std::vector<Update> valid;
  for (const auto& u : arrivals)
    if (!read_set_stale(u, versions)) valid.push_back(u);
  epoch_close(s, valid, {});
  return s;
}

}  // namespace

TEST_SUITE("sync_filter") {

TEST_CASE("classification rules") {
  AggregatorState state;
  state.committed_versions = genesis_versions();

  SUBCASE("empty write set is null") {
    Update u = make_update(1, 0, 0, 5, 1, 0);
    CHECK(u.is_null);
    CHECK(classify(u, state) == UpdateClass::null_update);
  }

  SUBCASE("stale read set conflicts") {
    Update u = make_update(2, 0, 0, 7, 2, 128);
    u.read_set[kAnchorKey] = 0;  // anchor committed at version 1
    CHECK(classify(u, state) == UpdateClass::conflicting);

    Update fresh = make_update(3, 0, 0, 7, 2, 128);
    fresh.read_set[kAnchorKey] = kAnchorVersion;
    CHECK(classify(fresh, state) == UpdateClass::live);
  }

  SUBCASE("read of version 3 against committed 5 conflicts") {
    state.committed_versions[9] = 5;
    Update u = make_update(4, 1, 0, 12, 6, 64);
    u.read_set[9] = 3;
    CHECK(classify(u, state) == UpdateClass::conflicting);
  }

  SUBCASE("second identical update is redundant") {
    Update u = make_update(5, 0, 0, 3, 2, 256);
    CHECK(classify(u, state) == UpdateClass::live);
    // classify alone does not mutate state
    CHECK(classify(u, state) == UpdateClass::live);
    auto result = aggregate_and_filter({u}, state);
    CHECK(result.stats.kept == 1);
    CHECK(classify(u, state) == UpdateClass::redundant);
  }

  SUBCASE("epoch mismatch is an error") {
    Update u = make_update(6, 0, 3, 3, 2, 256);
    CHECK_THROWS_AS(classify(u, state), ValidationError);
  }
}

TEST_CASE("null dominates redundant; redundant dominates conflicting") {
  AggregatorState state;
  state.committed_versions = genesis_versions();
  Update nullish = make_update(1, 0, 0, 5, 1, 0);
  nullish.read_set[kAnchorKey] = 0;  // also stale, but null wins
  CHECK(classify(nullish, state) == UpdateClass::null_update);

  Update conflicted = make_update(2, 0, 0, 6, 1, 99);
  conflicted.read_set[kAnchorKey] = 0;
  auto r1 = aggregate_and_filter({conflicted}, state);
  CHECK(r1.stats.conflicting == 1);
  CHECK(r1.kept.empty());
  // same content arriving again still classifies conflicting (hash not seen)
  CHECK(classify(conflicted, state) == UpdateClass::conflicting);
}

TEST_CASE("unique non-conflicting batch passes through untouched") {
  AggregatorState state;
  std::vector<Update> batch;
  for (int i = 0; i < 10; ++i)
    batch.push_back(make_update(100 + static_cast<std::uint64_t>(i), i % 3, 0,
                                50 + static_cast<std::uint64_t>(i), 2, 1024));
  auto result = aggregate_and_filter(batch, state);
  CHECK(result.kept.size() == 10);
  CHECK(result.stats.kept == 10);
  CHECK(result.stats.bytes_in == 10 * 1024);
  CHECK(result.stats.bytes_out == result.stats.bytes_in);
  CHECK(result.stats.total() == 10);
}

TEST_CASE("planted stale updates are dropped with exact byte accounting") {
  AggregatorState state;
  state.committed_versions = genesis_versions();
  std::vector<Update> batch;
  for (int i = 0; i < 100; ++i) {
    Update u = make_update(200 + static_cast<std::uint64_t>(i), 0, 0,
                           1000 + static_cast<std::uint64_t>(i), 2, 1024);
    if (i < 30) u.read_set[kAnchorKey] = 0;  // first 30 are stale by construction
    batch.push_back(u);
  }
  auto result = aggregate_and_filter(batch, state);
  CHECK(result.stats.conflicting == 30);
  CHECK(result.stats.kept == 70);
  CHECK(result.stats.bytes_in == 100 * 1024);
  CHECK(result.stats.bytes_out == 70 * 1024);
}

TEST_CASE("duplicate pair keeps one") {
  AggregatorState state;
  Update u = make_update(7, 2, 0, 11, 2, 512);
  auto result = aggregate_and_filter({u, u}, state);
  CHECK(result.stats.kept == 1);
  CHECK(result.stats.redundant == 1);
  CHECK(result.kept.size() == 1);
  CHECK(result.stats.bytes_out == 512);
}

TEST_CASE("epoch boundary clears the hash window and folds new versions") {
  AggregatorState state;
  Update u = make_update(8, 0, 0, 4, 2, 100);
  aggregate_and_filter({u}, state);
  CHECK(state.seen_hashes.size() == 1);
  state.advance_epoch(1, {{4, 2}});
  CHECK(state.seen_hashes.empty());
  CHECK(state.committed_versions.at(4) == 2);
  // versions never regress
  state.advance_epoch(2, {{4, 1}});
  CHECK(state.committed_versions.at(4) == 2);
  CHECK_THROWS_AS(state.advance_epoch(1, {}), ValidationError);
}

TEST_CASE("filtering is task-preserving on randomized workloads") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    WorkloadConfig cfg;
    cfg.updates_per_node = 25;
    cfg.conflict_ratio = 0.2;
    cfg.dup_ratio = 0.15;
    cfg.null_ratio = 0.1;
    cfg.zipf_theta = 0.8;
    cfg.key_space = 16;
    WorkloadGenerator gen(3, cfg, seed);

    AggregatorState agg;
    agg.committed_versions = genesis_versions();
    std::vector<Update> all;
    for (auto& batch : gen.generate_round(0))
      all.insert(all.end(), batch.begin(), batch.end());
    auto filtered = aggregate_and_filter(all, agg);

    ReplicaState base;
    base.committed[kAnchorKey] = {kAnchorVersion, -1, 0, 0};
    auto unfiltered_state = close_with_validation(base, all);
    auto filtered_state = close_with_validation(base, filtered.kept);
    CHECK(unfiltered_state.digest() == filtered_state.digest());
    CHECK(unfiltered_state.committed == filtered_state.committed);
  }
}

TEST_CASE("bytes-out fraction falls as the planted conflict ratio rises") {
  double prev_ratio = 2.0;
  for (double conflict : {0.05, 0.10, 0.20, 0.30, 0.40}) {
    WorkloadConfig cfg;
    cfg.updates_per_node = 40;
    cfg.conflict_ratio = conflict;
    WorkloadGenerator gen(4, cfg, 7);
    AggregatorState agg;
    agg.committed_versions = genesis_versions();
    std::vector<Update> all;
    for (auto& batch : gen.generate_round(0))
      all.insert(all.end(), batch.begin(), batch.end());
    auto result = aggregate_and_filter(all, agg);
    const double ratio = static_cast<double>(result.stats.bytes_out) /
                         static_cast<double>(result.stats.bytes_in);
    CHECK(ratio < prev_ratio);
    CHECK(ratio == doctest::Approx(1.0 - conflict).epsilon(0.02));
    prev_ratio = ratio;
  }
}

TEST_CASE("workload generator determinism and quota exactness") {
  WorkloadConfig cfg;
  cfg.updates_per_node = 20;
  cfg.conflict_ratio = 0.30;
  cfg.dup_ratio = 0.10;
  cfg.null_ratio = 0.05;
  WorkloadGenerator a(4, cfg, 42), b(4, cfg, 42);
  for (int epoch = 0; epoch < 3; ++epoch) {
    auto ba = a.generate_round(epoch);
    auto bb = b.generate_round(epoch);
    REQUIRE(ba.size() == bb.size());
    std::size_t nulls = 0, conflicts = 0, dups = 0, total = 0;
    for (std::size_t node = 0; node < ba.size(); ++node) {
      REQUIRE(ba[node].size() == bb[node].size());
      for (std::size_t i = 0; i < ba[node].size(); ++i) CHECK(ba[node][i] == bb[node][i]);
      std::set<std::uint64_t> seen;
      for (const auto& u : ba[node]) {
        ++total;
        if (u.is_null) ++nulls;
        else if (u.read_set.count(kAnchorKey)) ++conflicts;
        else if (!seen.insert(u.txn_id).second) ++dups;
      }
    }
    CHECK(total == 80);
    CHECK(nulls == 4);      // 5% of 20 per node
    CHECK(conflicts == 24); // 30%
    CHECK(dups == 8);       // 10%
  }
}

TEST_CASE("workload json round-trip and validation") {
  WorkloadConfig cfg;
  cfg.updates_per_node = 7;
  cfg.zipf_theta = 0.9;
  cfg.silent_nodes = {2};
  auto parsed = WorkloadConfig::from_json(cfg.to_json());
  CHECK(parsed.updates_per_node == 7);
  CHECK(parsed.zipf_theta == doctest::Approx(0.9));
  CHECK(parsed.silent_nodes == std::set<int>{2});

  WorkloadConfig bad;
  bad.conflict_ratio = 0.7;
  bad.dup_ratio = 0.7;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("silent nodes generate nothing") {
  WorkloadConfig cfg;
  cfg.updates_per_node = 5;
  cfg.silent_nodes = {1};
  WorkloadGenerator gen(3, cfg, 1);
  auto round = gen.generate_round(0);
  CHECK(round[0].size() == 5);
  CHECK(round[1].empty());
  CHECK(round[2].size() == 5);
}

TEST_CASE("update json round-trip verifies the content hash") {
  Update u = make_update(9, 1, 4, 77, 6, 2048);
  u.read_set[3] = 2;
  auto parsed = Update::from_json(u.to_json());
  CHECK(parsed == u);

  auto j = u.to_json();
  j["content_hash"] = 12345;  // tampered
  CHECK_THROWS_AS(Update::from_json(j), ValidationError);
}

}  // TEST_SUITE("sync_filter")
