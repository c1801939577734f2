#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "geosync/update.hpp"

namespace geosync {

/// Winner record for one key: a last-writer-wins register ordered by
/// (version desc, origin asc, txn_id asc). The order is total over distinct
/// writers, which makes the per-key merge a join.
struct CommittedValue {
  std::uint64_t version = 0;
  int origin = 0;
  std::uint64_t txn_id = 0;
  std::uint64_t payload_bytes = 0;

  bool operator==(const CommittedValue&) const = default;
};

/// True when challenger beats incumbent under the register order.
bool lww_wins(const CommittedValue& challenger, const CommittedValue& incumbent);

using CommittedMap = std::map<std::uint64_t, CommittedValue>;

struct ReplicaState {
  CommittedMap committed;
  std::set<std::uint64_t> applied_txns;  // txns merged in the current epoch
  std::int64_t epoch = 0;

  /// Merge one update: idempotent, commutative, associative. Per key the
  /// higher version wins; ties break to lower origin then lower txn id.
  void apply(const Update& u);

  /// Order-independent digest of the committed map.
  std::uint64_t digest() const;
};

/// Pure form of the merge, for algebra checks.
ReplicaState merge(ReplicaState s, const Update& u);

std::uint64_t digest_of(const CommittedMap& committed);

struct EpochOutcome {
  std::int64_t epoch = 0;
  CommittedMap snapshot;
  std::vector<Update> carried_over;  // late arrivals, input to epoch+1
  std::uint64_t snapshot_digest = 0;
};

/// Merges the epoch's arrivals (any order), emits the snapshot, hands the
/// late list to the next epoch, bumps the epoch counter and resets the
/// applied-transaction window.
EpochOutcome epoch_close(ReplicaState& s, const std::vector<Update>& arrived,
                         std::vector<Update> late);

/// Worst-case additional visibility delay for a delayed update:
/// retransmission timeout plus the maximum WAN propagation delay.
double visibility_delay_bound(double tau_ms, double delta_wan_ms);

/// Snapshot generation withheld while updates from unreachable origins are
/// outstanding; heal() merges the buffered updates and closes the epoch,
/// yielding the same snapshot a partition-free run would have produced.
struct PartitionBufferedState {
  ReplicaState state;
  std::set<int> unreachable;
  std::vector<Update> pending;

  bool snapshot_withheld() const { return !healed; }
  bool healed = false;

  EpochOutcome heal(const std::vector<Update>& arrived_before_partition);
};

PartitionBufferedState partition_buffer(ReplicaState s, std::set<int> unreachable,
                                        std::vector<Update> pending);

}  // namespace geosync
