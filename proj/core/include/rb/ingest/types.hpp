#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rb/common/stats_schema.hpp"

namespace rb::ingest {

enum class EventType {
  Pass,
  Shot,
  Interception,
  Dribble,
  FoulWon,
  FoulCommitted,
  GoalkeeperAction,
  Block,
  Clearance,
  BallRecovery,
  CounterpressTag,
};

inline constexpr std::size_t kNumEventTypes = 11;

std::string_view to_string(EventType t);
std::optional<EventType> event_type_from_string(std::string_view name);

/// One on-ball action after adapter translation. Boolean qualifiers are stored
/// as 0/1 in `attributes`; numeric qualifiers keep their value.
struct NormalizedEvent {
  std::string match_id;
  EventType type = EventType::Pass;
  std::string player_id;
  std::string team_id;
  std::map<std::string, double> attributes;
  std::optional<double> xg;  // present iff type == Shot

  bool flag(std::string_view name) const {
    auto it = attributes.find(std::string(name));
    return it != attributes.end() && it->second != 0.0;
  }

  bool operator==(const NormalizedEvent&) const = default;
};

/// Position code 0 marks a squad member with no recorded position (unused substitute).
inline constexpr int kUnknownPositionCode = 0;

struct SheetEntry {
  std::string player_id;
  std::string team_id;
  int position_id = kUnknownPositionCode;  // 1..25, or 0 when unrecorded
  bool participated = false;

  bool operator==(const SheetEntry&) const = default;
};

struct MatchSheet {
  std::string match_id;
  std::string kickoff_date;  // YYYY-MM-DD
  std::string league_id;
  std::string home_team_id;
  std::string away_team_id;
  std::vector<SheetEntry> entries;

  bool operator==(const MatchSheet&) const = default;
};

struct PlayerMatchStats {
  std::string match_id;
  std::string player_id;
  std::string team_id;
  int position_id = kUnknownPositionCode;
  bool participated = false;
  std::int64_t kickoff_order = 0;
  std::array<double, kNumRawStats> stats{};

  double operator[](Stat s) const { return stats[index_of(s)]; }
  bool operator==(const PlayerMatchStats&) const = default;
};

/// All sheets and player rows of a season. Rows are grouped by match in sheet
/// order, and within a match follow the sheet's entry order.
struct Dataset {
  std::vector<MatchSheet> sheets;
  std::vector<PlayerMatchStats> rows;

  bool operator==(const Dataset&) const = default;
};

}  // namespace rb::ingest
