#include "geosync/crdt.hpp"

#include "geosync/error.hpp"
#include "geosync/hash.hpp"

namespace geosync {

bool lww_wins(const CommittedValue& challenger, const CommittedValue& incumbent) {
  if (challenger.version != incumbent.version) return challenger.version > incumbent.version;
  if (challenger.origin != incumbent.origin) return challenger.origin < incumbent.origin;
  return challenger.txn_id < incumbent.txn_id;
}

void ReplicaState::apply(const Update& u) {
  if (applied_txns.count(u.txn_id)) return;
  applied_txns.insert(u.txn_id);
  for (const auto& [key, w] : u.write_set) {
    const CommittedValue challenger{w.version, u.origin, u.txn_id, w.payload_bytes};
    auto it = committed.find(key);
    if (it == committed.end() || lww_wins(challenger, it->second)) committed[key] = challenger;
  }
}

ReplicaState merge(ReplicaState s, const Update& u) {
  s.apply(u);
  return s;
}

std::uint64_t digest_of(const CommittedMap& committed) {
  std::uint64_t h = kFnvOffset;
  for (const auto& [key, v] : committed) {
    h = fnv1a64_u64(key, h);
    h = fnv1a64_u64(v.version, h);
    h = fnv1a64_u64(static_cast<std::uint64_t>(v.origin), h);
    h = fnv1a64_u64(v.txn_id, h);
    h = fnv1a64_u64(v.payload_bytes, h);
  }
  return h;
}

std::uint64_t ReplicaState::digest() const { return digest_of(committed); }

EpochOutcome epoch_close(ReplicaState& s, const std::vector<Update>& arrived,
                         std::vector<Update> late) {
  for (const Update& u : arrived) {
    require(u.epoch <= s.epoch, "epoch_close: arrival from a future epoch");
    s.apply(u);
  }
  EpochOutcome out;
  out.epoch = s.epoch;
  out.snapshot = s.committed;
  out.carried_over = std::move(late);
  out.snapshot_digest = s.digest();
  s.epoch += 1;
  s.applied_txns.clear();
  return out;
}

double visibility_delay_bound(double tau_ms, double delta_wan_ms) {
  require(tau_ms >= 0.0 && delta_wan_ms >= 0.0, "visibility bound: negative inputs");
  return tau_ms + delta_wan_ms;
}

PartitionBufferedState partition_buffer(ReplicaState s, std::set<int> unreachable,
                                        std::vector<Update> pending) {
  PartitionBufferedState b;
  b.state = std::move(s);
  b.unreachable = std::move(unreachable);
  b.pending = std::move(pending);
  return b;
}

EpochOutcome PartitionBufferedState::heal(const std::vector<Update>& arrived_before_partition) {
  healed = true;
  std::vector<Update> all = arrived_before_partition;
  all.insert(all.end(), pending.begin(), pending.end());
  pending.clear();
  unreachable.clear();
  return epoch_close(state, all, {});
}

}  // namespace geosync
