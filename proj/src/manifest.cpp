#include "polyreach/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace polyreach {

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("fnv1a64_file: cannot open " + path);
  std::uint64_t hash = 0xCBF29CE484222325ull;
  char buffer[1 << 14];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buffer[i]);
      hash *= 0x100000001B3ull;
    }
    if (got < static_cast<std::streamsize>(sizeof(buffer))) break;
  }
  return hash;
}

void write_manifest(const Manifest& manifest, const std::string& path) {
  nlohmann::ordered_json j;
  j["tool"] = "polyreach";
  j["subcommand"] = manifest.subcommand;
  nlohmann::ordered_json params;
  for (const auto& [key, value] : manifest.params) params[key] = value;
  j["params"] = std::move(params);
  nlohmann::ordered_json outputs = nlohmann::ordered_json::array();
  for (const auto& output : manifest.outputs) {
    nlohmann::ordered_json entry;
    entry["path"] = output;
    char hex[20];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64_file(output)));
    entry["fnv1a64"] = hex;
    outputs.push_back(std::move(entry));
  }
  j["outputs"] = std::move(outputs);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_manifest: cannot open " + path);
  out << j.dump(2) << '\n';
}

}  // namespace polyreach
