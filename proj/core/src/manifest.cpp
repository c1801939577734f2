#include "geosync/manifest.hpp"

#include <fstream>

#include "geosync/error.hpp"
#include "geosync/hash.hpp"

namespace geosync {

nlohmann::json RunManifest::to_json() const {
  return nlohmann::json{{"command", command},
                        {"config", config},
                        {"seed", seed},
                        {"input_digests", input_digests},
                        {"version", version}};
}

std::uint64_t fnv1a64_of_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  require(in.good(), "cannot open file for digest: " + p.string());
  std::uint64_t h = kFnvOffset;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
    if (!in) break;
  }
  return h;
}

void write_file_atomic(const std::filesystem::path& p, const std::string& content) {
  const std::filesystem::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), "cannot open output file: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    require(out.good(), "failed writing output file: " + tmp.string());
  }
  std::filesystem::rename(tmp, p);
}

}  // namespace geosync
