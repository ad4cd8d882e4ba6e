#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace polyreach {

/// FNV-1a over the file bytes; an integrity fingerprint for manifests.
std::uint64_t fnv1a64_file(const std::string& path);

/// Run manifest: the subcommand, every parameter (seeds included) and a
/// fingerprint of each artifact, so any output is reproducible from the
/// manifest alone. Contains no timestamps; reruns are byte-identical.
struct Manifest {
  std::string subcommand;
  std::map<std::string, std::string> params;  // ordered for stable output
  std::vector<std::string> outputs;           // paths, hashed at write time
};

void write_manifest(const Manifest& manifest, const std::string& path);

}  // namespace polyreach
