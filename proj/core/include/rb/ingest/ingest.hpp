#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "rb/ingest/types.hpp"

namespace rb::ingest {

struct ParsedEvents {
  std::vector<NormalizedEvent> events;
  std::size_t dropped = 0;  // events of unmapped types, own goals, shootout kicks
};

/// Match-level facts that some formats keep outside the lineup file.
struct MatchMetadata {
  std::string kickoff_date;
  std::string league_id;
  std::string home_team_id;
  std::string away_team_id;
};

using MatchMetadataIndex = std::map<std::string, MatchMetadata>;

/// Format-specific translation of event and lineup files.
class SourceAdapter {
 public:
  virtual ~SourceAdapter() = default;
  virtual std::string_view name() const = 0;

  /// Events in chronological order. `match_id` is used when the file does not carry one.
  virtual ParsedEvents parse_events(std::string_view bytes, const std::string& match_id) const = 0;

  virtual MatchSheet parse_lineup(std::string_view bytes, const std::string& match_id,
                                  const MatchMetadataIndex& metadata) const = 0;

  /// Reads match metadata files (e.g. competition/season listings). Default: none needed.
  virtual MatchMetadataIndex parse_metadata(std::string_view bytes) const;
};

/// Registered adapters: "native" (the project's own JSON layout) and "statsbomb"
/// (the open event-data layout). Throws ConfigError for unknown names.
const SourceAdapter& find_adapter(std::string_view name);
std::vector<std::string_view> adapter_names();

/// Convenience wrapper over find_adapter(adapter).parse_events.
ParsedEvents parse_events(std::string_view bytes, std::string_view adapter,
                          const std::string& match_id = {});

/// Per-player match statistics, one row per sheet entry, in entry order.
/// A player counts as participating when the sheet says so or any event names them;
/// non-participants get all-zero statistics. Throws IntegrityError when an event
/// references a player who is not on the sheet.
std::vector<PlayerMatchStats> compute_player_stats(const std::vector<NormalizedEvent>& events,
                                                   const MatchSheet& sheet);

/// Copies the participation decision of computed rows back into the sheet.
void sync_participation(MatchSheet& sheet, const std::vector<PlayerMatchStats>& rows);

/// Sorts sheets chronologically (kickoff date, then match id), regroups rows to
/// follow, and assigns each row the chronological index of its match.
void assign_kickoff_order(Dataset& dataset);

struct IngestSummary {
  std::size_t matches = 0;
  std::size_t players = 0;
  std::size_t teams = 0;
  std::size_t events = 0;
  std::size_t dropped_events = 0;
};

IngestSummary summarize(const Dataset& dataset);

/// Runs parsing and stat computation over a directory pair. Event and lineup files
/// are matched by file stem. `metadata_dir` may be empty for formats that need none.
Dataset ingest_directory(const std::filesystem::path& events_dir,
                         const std::filesystem::path& lineups_dir, std::string_view adapter,
                         const std::filesystem::path& metadata_dir, IngestSummary* summary);

}  // namespace rb::ingest
