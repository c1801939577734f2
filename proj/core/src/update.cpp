#include "geosync/update.hpp"

#include "geosync/error.hpp"
#include "geosync/hash.hpp"

namespace geosync {

std::uint64_t Update::payload_bytes() const {
  std::uint64_t total = 0;
  for (const auto& [key, w] : write_set) total += w.payload_bytes;
  return total;
}

std::uint64_t Update::compute_hash(const std::map<std::uint64_t, WriteEntry>& write_set) {
  std::uint64_t h = kFnvOffset;
  for (const auto& [key, w] : write_set) {
    h = fnv1a64_u64(key, h);
    h = fnv1a64_u64(w.version, h);
    h = fnv1a64_u64(w.payload_bytes, h);
  }
  return h;
}

void Update::finalize() {
  content_hash = compute_hash(write_set);
  is_null = write_set.empty() || payload_bytes() == 0;
}

nlohmann::json Update::to_json() const {
  nlohmann::json writes = nlohmann::json::array();
  for (const auto& [key, w] : write_set) writes.push_back({key, w.version, w.payload_bytes});
  nlohmann::json reads = nlohmann::json::array();
  for (const auto& [key, ver] : read_set) reads.push_back({key, ver});
  return nlohmann::json{{"txn_id", txn_id},   {"origin", origin},
                        {"epoch", epoch},     {"write_set", std::move(writes)},
                        {"read_set", std::move(reads)}, {"content_hash", content_hash},
                        {"is_null", is_null}};
}

Update Update::from_json(const nlohmann::json& j) {
  Update u;
  u.txn_id = j.at("txn_id").get<std::uint64_t>();
  u.origin = j.at("origin").get<int>();
  u.epoch = j.at("epoch").get<std::int64_t>();
  for (const auto& w : j.at("write_set")) {
    require(w.is_array() && w.size() == 3, "update json: write entry must be [key, version, bytes]");
    u.write_set[w[0].get<std::uint64_t>()] = {w[1].get<std::uint64_t>(), w[2].get<std::uint64_t>()};
  }
  for (const auto& r : j.at("read_set")) {
    require(r.is_array() && r.size() == 2, "update json: read entry must be [key, version]");
    u.read_set[r[0].get<std::uint64_t>()] = r[1].get<std::uint64_t>();
  }
  const auto declared_hash = j.at("content_hash").get<std::uint64_t>();
  u.finalize();
  require(u.content_hash == declared_hash, "update json: content hash mismatch");
  if (j.contains("is_null"))
    require(u.is_null == j.at("is_null").get<bool>(), "update json: is_null mismatch");
  return u;
}

bool read_set_stale(const Update& u, const std::map<std::uint64_t, std::uint64_t>& committed_versions) {
  for (const auto& [key, observed] : u.read_set) {
    auto it = committed_versions.find(key);
    if (it != committed_versions.end() && observed < it->second) return true;
  }
  return false;
}

}  // namespace geosync
