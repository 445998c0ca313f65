#include "run_manifest.hpp"

#include <algorithm>

#include "rb/common/digest.hpp"
#include "rb/common/error.hpp"

#ifndef RB_TOOL_VERSION
#define RB_TOOL_VERSION "unknown"
#endif

namespace fs = std::filesystem;

namespace rb::cli {

std::string digest_path(const fs::path& p) {
  if (fs::is_regular_file(p)) return sha256_file(p);
  if (!fs::is_directory(p)) throw IoError("cannot digest missing path " + p.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(p))
    if (e.is_regular_file() && e.path().filename() != kManifestName) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string listing;
  for (const auto& f : files) listing += fs::relative(f, p).generic_string() + '\t' + sha256_file(f) + '\n';
  return sha256_hex(listing);
}

void record_run(const fs::path& dir, const RunRecord& rec) {
  const fs::path run_dir = fs::absolute(dir);
  const fs::path path = run_dir / kManifestName;
  nlohmann::ordered_json m;
  if (fs::exists(path)) {
    try {
      m = nlohmann::ordered_json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), 0);
    }
  }
  m["tool"] = "risingballer";
  m["version"] = RB_TOOL_VERSION;
  if (!m.contains("runs") || !m["runs"].is_object()) m["runs"] = nlohmann::ordered_json::object();

  nlohmann::ordered_json r;
  r["config"] = rec.config;
  r["seed"] = rec.seed;
  r["inputs"] = nlohmann::ordered_json::array();
  for (const auto& in : rec.inputs)
    r["inputs"].push_back({{"path", in.generic_string()}, {"sha256", digest_path(in)}});
  r["artifacts"] = nlohmann::ordered_json::array();
  for (const auto& a : rec.artifacts) {
    const fs::path full = fs::absolute(a);
    r["artifacts"].push_back(
        {{"path", fs::relative(full, run_dir).generic_string()}, {"sha256", digest_path(full)}});
  }
  m["runs"][rec.command] = r;
  write_file(path, m.dump(2) + "\n");
}

}  // namespace rb::cli
