#pragma once

#include <cstdint>
#include <map>

#include <nlohmann/json.hpp>

namespace geosync {

struct WriteEntry {
  std::uint64_t version = 0;
  std::uint64_t payload_bytes = 0;

  bool operator==(const WriteEntry&) const = default;
};

/// An epoch-scoped replicated write: the unit of filtering and merge.
/// content_hash is a deterministic digest of the write-set content, so two
/// updates with identical writes collide regardless of txn identity.
struct Update {
  std::uint64_t txn_id = 0;
  int origin = 0;
  std::int64_t epoch = 0;
  std::map<std::uint64_t, WriteEntry> write_set;
  std::map<std::uint64_t, std::uint64_t> read_set;  // key -> version observed
  std::uint64_t content_hash = 0;
  bool is_null = false;

  std::uint64_t payload_bytes() const;

  static std::uint64_t compute_hash(const std::map<std::uint64_t, WriteEntry>& write_set);

  /// Recomputes content_hash and is_null from the write set.
  void finalize();

  nlohmann::json to_json() const;
  static Update from_json(const nlohmann::json& j);

  bool operator==(const Update&) const = default;
};

/// True when some read in the update observed an older version than the
/// given committed map: the OCC staleness rule shared by the aggregator
/// filter and the replica-side commit validation.
bool read_set_stale(const Update& u, const std::map<std::uint64_t, std::uint64_t>& committed_versions);

}  // namespace geosync
