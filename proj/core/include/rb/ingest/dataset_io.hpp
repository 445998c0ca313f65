#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rb/ingest/types.hpp"

namespace rb::ingest {

inline constexpr int kDatasetFormatVersion = 1;

/// Line-delimited dataset text. Line 1 is a header record; each match then
/// contributes one sheet record followed by one record per squad player with the
/// fields match_id, kickoff_date, league_id, player_id, team_id, position_id,
/// participated, s00..s38. Throws IntegrityError when a sheet entry has no row.
std::string serialize_dataset(const std::vector<PlayerMatchStats>& rows,
                              const std::vector<MatchSheet>& sheets);

void export_dataset(const std::vector<PlayerMatchStats>& rows,
                    const std::vector<MatchSheet>& sheets, const std::filesystem::path& path);

/// Parses dataset text and assigns kickoff order. Throws ParseError / IntegrityError.
Dataset parse_dataset(std::string_view text);
Dataset import_dataset(const std::filesystem::path& path);

}  // namespace rb::ingest
