#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

namespace geosync {

inline constexpr const char* kArtifactVersion = "0.1.0";

/// Provenance block embedded in every output file: the command, its fully
/// resolved configuration, the seed and digests of all inputs. Two runs with
/// identical manifests produce byte-identical outputs.
struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> input_digests;  // name -> fnv64 hex
  std::string version = kArtifactVersion;

  nlohmann::json to_json() const;
};

std::uint64_t fnv1a64_of_file(const std::filesystem::path& p);

/// Write-then-rename so failed runs never leave partial output behind.
void write_file_atomic(const std::filesystem::path& p, const std::string& content);

}  // namespace geosync
