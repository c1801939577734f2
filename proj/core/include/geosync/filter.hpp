#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "geosync/update.hpp"

namespace geosync {

enum class UpdateClass { live, redundant, conflicting, null_update };

const char* to_string(UpdateClass c);

/// Per-aggregator screening state for the current epoch. committed_versions
/// is the commit snapshot as of the last epoch close and only moves forward;
/// seen_hashes is cleared at every epoch boundary.
struct AggregatorState {
  std::int64_t epoch = 0;
  std::map<std::uint64_t, std::uint64_t> committed_versions;
  std::set<std::uint64_t> seen_hashes;

  /// Enters a new epoch: clears the hash window and folds the new commit
  /// snapshot in (versions never regress).
  void advance_epoch(std::int64_t new_epoch,
                     const std::map<std::uint64_t, std::uint64_t>& committed_snapshot);
};

/// One-update screening: null beats redundant beats conflicting beats live.
/// Expects u.epoch to match the state's epoch.
UpdateClass classify(const Update& u, const AggregatorState& state);

struct FilterStats {
  std::uint64_t kept = 0;
  std::uint64_t redundant = 0;
  std::uint64_t conflicting = 0;
  std::uint64_t null_count = 0;
  std::uint64_t bytes_in = 0;
  std::uint64_t bytes_out = 0;

  std::uint64_t total() const { return kept + redundant + conflicting + null_count; }
  FilterStats& operator+=(const FilterStats& o);
};

struct FilterResult {
  std::vector<Update> kept;
  FilterStats stats;
};

/// Classifies in arrival order, inserting each live update's hash before the
/// later ones are examined, and keeps only the live updates. Commit versions
/// are not touched here; commitment happens at epoch close.
FilterResult aggregate_and_filter(const std::vector<Update>& updates, AggregatorState& state);

}  // namespace geosync
