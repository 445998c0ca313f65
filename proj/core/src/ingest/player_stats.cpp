#include <algorithm>
#include <set>
#include <unordered_map>

#include "rb/common/digest.hpp"
#include "rb/common/error.hpp"
#include "rb/ingest/ingest.hpp"

namespace rb::ingest {

namespace {

void bump(std::array<double, kNumRawStats>& s, Stat stat, double by = 1.0) { s[index_of(stat)] += by; }

// Event predicate -> statistic mapping. docs/stat_mapping.md mirrors this table.
void accumulate(const NormalizedEvent& ev, std::array<double, kNumRawStats>& s) {
  auto when = [&](const char* flag, Stat stat) {
    if (ev.flag(flag)) bump(s, stat);
  };
  switch (ev.type) {
    case EventType::Pass:
      bump(s, Stat::PassTotal);
      when("cross", Stat::PassCross);
      when("cut_back", Stat::PassCutBack);
      when("shot_assist", Stat::PassShotAssist);
      when("goal_assist", Stat::PassGoalAssist);
      when("no_touch", Stat::PassNoTouch);
      when("interception", Stat::PassInterception);
      when("incomplete", Stat::PassIncomplete);
      when("offside", Stat::PassOffside);
      when("through_ball", Stat::PassThroughBall);
      break;
    case EventType::Shot:
      bump(s, Stat::ShotTotal);
      bump(s, Stat::ShotXg, ev.xg.value_or(0.0));
      when("corner", Stat::ShotCorner);
      when("free_kick", Stat::ShotFreeKick);
      when("open_play", Stat::ShotOpenPlay);
      when("penalty", Stat::ShotPenalty);
      when("saved", Stat::ShotSaved);
      when("off_target", Stat::ShotOffTarget);
      when("blocked", Stat::ShotBlocked);
      when("goal", Stat::ShotGoal);
      break;
    case EventType::Interception:
      bump(s, Stat::InterceptionTotal);
      bump(s, ev.flag("won") ? Stat::InterceptionWon : Stat::InterceptionLost);
      break;
    case EventType::Dribble:
      bump(s, Stat::DribbleTotal);
      bump(s, ev.flag("complete") ? Stat::DribbleComplete : Stat::DribbleIncomplete);
      break;
    case EventType::FoulWon:
      bump(s, Stat::FoulWonTotal);
      when("penalty", Stat::FoulWonPenalty);
      break;
    case EventType::FoulCommitted:
      bump(s, Stat::FoulCommittedTotal);
      when("penalty", Stat::FoulCommittedPenalty);
      when("yellow_card", Stat::FoulCommittedYellowCard);
      when("red_card", Stat::FoulCommittedRedCard);
      break;
    case EventType::GoalkeeperAction:
      when("goal_conceded", Stat::GoalkeeperGoalConceded);
      when("save", Stat::GoalkeeperSave);
      when("shot_faced", Stat::GoalkeeperShotFaced);
      break;
    case EventType::Block:
      bump(s, Stat::BlockTotal);
      break;
    case EventType::Clearance:
      bump(s, Stat::ClearanceTotal);
      break;
    case EventType::BallRecovery:
      bump(s, Stat::BallRecoveryTotal);
      break;
    case EventType::CounterpressTag:
      bump(s, Stat::CounterpressTotal);
      break;
  }
}

}  // namespace

std::vector<PlayerMatchStats> compute_player_stats(const std::vector<NormalizedEvent>& events,
                                                   const MatchSheet& sheet) {
  std::unordered_map<std::string, std::size_t> slot;
  std::vector<PlayerMatchStats> rows;
  rows.reserve(sheet.entries.size());
  for (const SheetEntry& e : sheet.entries) {
    if (!slot.emplace(e.player_id, rows.size()).second) {
      throw IntegrityError("match " + sheet.match_id + ": player " + e.player_id +
                           " appears more than once on the sheet");
    }
    if (e.team_id != sheet.home_team_id && e.team_id != sheet.away_team_id) {
      throw IntegrityError("match " + sheet.match_id + ": player " + e.player_id +
                           " belongs to team " + e.team_id + " which is not playing");
    }
    PlayerMatchStats row;
    row.match_id = sheet.match_id;
    row.player_id = e.player_id;
    row.team_id = e.team_id;
    row.position_id = e.position_id;
    row.participated = e.participated;
    rows.push_back(std::move(row));
  }

  for (const NormalizedEvent& ev : events) {
    auto it = slot.find(ev.player_id);
    if (it == slot.end()) {
      throw IntegrityError("match " + sheet.match_id + ": event references player " +
                           ev.player_id + " who is not on the match sheet");
    }
    PlayerMatchStats& row = rows[it->second];
    row.participated = true;
    accumulate(ev, row.stats);
  }

  for (PlayerMatchStats& row : rows) {
    if (!row.participated) row.stats.fill(0.0);
  }
  return rows;
}

void sync_participation(MatchSheet& sheet, const std::vector<PlayerMatchStats>& rows) {
  for (SheetEntry& e : sheet.entries) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const PlayerMatchStats& r) {
      return r.match_id == sheet.match_id && r.player_id == e.player_id;
    });
    if (it != rows.end()) e.participated = it->participated;
  }
}

void assign_kickoff_order(Dataset& dataset) {
  std::vector<std::size_t> order(dataset.sheets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const MatchSheet& x = dataset.sheets[a];
    const MatchSheet& y = dataset.sheets[b];
    return x.kickoff_date != y.kickoff_date ? x.kickoff_date < y.kickoff_date
                                            : x.match_id < y.match_id;
  });

  std::unordered_map<std::string, std::vector<PlayerMatchStats>> by_match;
  for (PlayerMatchStats& r : dataset.rows) by_match[r.match_id].push_back(std::move(r));

  std::vector<MatchSheet> sheets;
  std::vector<PlayerMatchStats> rows;
  sheets.reserve(order.size());
  rows.reserve(dataset.rows.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    MatchSheet& sheet = dataset.sheets[order[k]];
    auto it = by_match.find(sheet.match_id);
    if (it != by_match.end()) {
      for (PlayerMatchStats& r : it->second) {
        r.kickoff_order = static_cast<std::int64_t>(k);
        rows.push_back(std::move(r));
      }
      by_match.erase(it);
    }
    sheets.push_back(std::move(sheet));
  }
  if (!by_match.empty()) {
    throw IntegrityError("rows reference match " + by_match.begin()->first +
                         " which has no match sheet");
  }
  dataset.sheets = std::move(sheets);
  dataset.rows = std::move(rows);
}

IngestSummary summarize(const Dataset& dataset) {
  IngestSummary s;
  s.matches = dataset.sheets.size();
  std::set<std::string> players;
  std::set<std::string> teams;
  for (const MatchSheet& m : dataset.sheets) {
    teams.insert(m.home_team_id);
    teams.insert(m.away_team_id);
    for (const SheetEntry& e : m.entries) players.insert(e.player_id);
  }
  s.players = players.size();
  s.teams = teams.size();
  return s;
}

Dataset ingest_directory(const std::filesystem::path& events_dir,
                         const std::filesystem::path& lineups_dir, std::string_view adapter_name,
                         const std::filesystem::path& metadata_dir, IngestSummary* summary) {
  namespace fs = std::filesystem;
  const SourceAdapter& adapter = find_adapter(adapter_name);

  std::vector<fs::path> event_files;
  if (fs::is_directory(events_dir)) {
    for (const auto& entry : fs::directory_iterator(events_dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") {
        event_files.push_back(entry.path());
      }
    }
  }
  if (event_files.empty()) throw IntegrityError("no event files found in " + events_dir.string());
  std::sort(event_files.begin(), event_files.end());

  MatchMetadataIndex metadata;
  if (!metadata_dir.empty()) {
    for (const auto& entry : fs::recursive_directory_iterator(metadata_dir)) {
      if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
      for (auto& [id, md] : adapter.parse_metadata(read_file(entry.path()))) {
        metadata.insert_or_assign(id, md);
      }
    }
  }

  Dataset ds;
  std::size_t n_events = 0;
  std::size_t n_dropped = 0;
  for (const fs::path& ev_path : event_files) {
    const std::string match_id = ev_path.stem().string();
    const fs::path lineup_path = lineups_dir / ev_path.filename();
    if (!fs::exists(lineup_path)) {
      throw IntegrityError("no lineup file for match " + match_id + " in " + lineups_dir.string());
    }
    ParsedEvents parsed = adapter.parse_events(read_file(ev_path), match_id);
    MatchSheet sheet = adapter.parse_lineup(read_file(lineup_path), match_id, metadata);
    for (NormalizedEvent& e : parsed.events) e.match_id = sheet.match_id;
    std::vector<PlayerMatchStats> rows = compute_player_stats(parsed.events, sheet);
    sync_participation(sheet, rows);
    n_events += parsed.events.size();
    n_dropped += parsed.dropped;
    ds.sheets.push_back(std::move(sheet));
    for (auto& r : rows) ds.rows.push_back(std::move(r));
  }
  assign_kickoff_order(ds);
  if (summary) {
    *summary = summarize(ds);
    summary->events = n_events;
    summary->dropped_events = n_dropped;
  }
  return ds;
}

}  // namespace rb::ingest
