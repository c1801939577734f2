#include "geosync/filter.hpp"

#include "geosync/error.hpp"

namespace geosync {

const char* to_string(UpdateClass c) {
  switch (c) {
    case UpdateClass::live: return "live";
    case UpdateClass::redundant: return "redundant";
    case UpdateClass::conflicting: return "conflicting";
    case UpdateClass::null_update: return "null";
  }
  return "?";
}

void AggregatorState::advance_epoch(std::int64_t new_epoch,
                                    const std::map<std::uint64_t, std::uint64_t>& committed_snapshot) {
  require(new_epoch >= epoch, "aggregator state: epoch must not go backwards");
  epoch = new_epoch;
  seen_hashes.clear();
  for (const auto& [key, ver] : committed_snapshot) {
    auto it = committed_versions.find(key);
    if (it == committed_versions.end() || it->second < ver) committed_versions[key] = ver;
  }
}

UpdateClass classify(const Update& u, const AggregatorState& state) {
  require(u.epoch == state.epoch, "classify: update epoch does not match aggregator epoch");
  if (u.is_null) return UpdateClass::null_update;
  if (state.seen_hashes.count(u.content_hash)) return UpdateClass::redundant;
  if (read_set_stale(u, state.committed_versions)) return UpdateClass::conflicting;
  return UpdateClass::live;
}

FilterStats& FilterStats::operator+=(const FilterStats& o) {
  kept += o.kept;
  redundant += o.redundant;
  conflicting += o.conflicting;
  null_count += o.null_count;
  bytes_in += o.bytes_in;
  bytes_out += o.bytes_out;
  return *this;
}

FilterResult aggregate_and_filter(const std::vector<Update>& updates, AggregatorState& state) {
  FilterResult result;
  for (const Update& u : updates) {
    result.stats.bytes_in += u.payload_bytes();
    switch (classify(u, state)) {
      case UpdateClass::live:
        state.seen_hashes.insert(u.content_hash);
        result.kept.push_back(u);
        result.stats.kept++;
        result.stats.bytes_out += u.payload_bytes();
        break;
      case UpdateClass::redundant:
        result.stats.redundant++;
        break;
      case UpdateClass::conflicting:
        result.stats.conflicting++;
        break;
      case UpdateClass::null_update:
        result.stats.null_count++;
        break;
    }
  }
  return result;
}

}  // namespace geosync
