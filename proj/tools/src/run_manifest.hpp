#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace rb::cli {

inline constexpr const char* kManifestName = "run_manifest.json";

// SHA-256 of a file, or of the sorted (relative path, file digest) listing of a
// directory. A run manifest inside the directory is ignored.
std::string digest_path(const std::filesystem::path& p);

// One command's entry in the manifest at the root of its run directory.
struct RunRecord {
  std::string command;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::uint64_t seed = 0;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> artifacts;  // files inside the run directory
};

// Merges `rec` into <run_dir>/run_manifest.json, replacing an earlier entry for
// the same command. Digests are computed here; no timestamps are stored.
void record_run(const std::filesystem::path& run_dir, const RunRecord& rec);

}  // namespace rb::cli
