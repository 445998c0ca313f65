#include "rb/ingest/dataset_io.hpp"

#include <unordered_map>

#include <nlohmann/json.hpp>

#include "rb/common/digest.hpp"
#include "rb/common/error.hpp"
#include "rb/ingest/ingest.hpp"

namespace rb::ingest {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {
constexpr const char* kFormatName = "risingballer.dataset";
}

std::string serialize_dataset(const std::vector<PlayerMatchStats>& rows,
                              const std::vector<MatchSheet>& sheets) {
  std::unordered_map<std::string, const PlayerMatchStats*> index;
  index.reserve(rows.size());
  for (const PlayerMatchStats& r : rows) index.emplace(r.match_id + '\x1f' + r.player_id, &r);

  std::string out;
  ordered_json header;
  header["format"] = kFormatName;
  header["version"] = kDatasetFormatVersion;
  header["n_matches"] = sheets.size();
  header["stats"] = json::array();
  for (auto name : kStatNames) header["stats"].push_back(std::string(name));
  out += header.dump();
  out += '\n';

  for (const MatchSheet& sheet : sheets) {
    ordered_json s;
    s["match_id"] = sheet.match_id;
    s["kickoff_date"] = sheet.kickoff_date;
    s["league_id"] = sheet.league_id;
    s["home_team_id"] = sheet.home_team_id;
    s["away_team_id"] = sheet.away_team_id;
    s["n_entries"] = sheet.entries.size();
    out += s.dump();
    out += '\n';
    for (const SheetEntry& e : sheet.entries) {
      auto it = index.find(sheet.match_id + '\x1f' + e.player_id);
      if (it == index.end()) {
        throw IntegrityError("export: no statistics row for player " + e.player_id +
                             " in match " + sheet.match_id);
      }
      const PlayerMatchStats& r = *it->second;
      ordered_json row;
      row["match_id"] = sheet.match_id;
      row["kickoff_date"] = sheet.kickoff_date;
      row["league_id"] = sheet.league_id;
      row["player_id"] = r.player_id;
      row["team_id"] = r.team_id;
      row["position_id"] = r.position_id;
      row["participated"] = r.participated;
      for (std::size_t k = 0; k < kNumRawStats; ++k) {
        row[std::string(stat_field_name(k))] = r.stats[k];
      }
      out += row.dump();
      out += '\n';
    }
  }
  return out;
}

void export_dataset(const std::vector<PlayerMatchStats>& rows,
                    const std::vector<MatchSheet>& sheets, const std::filesystem::path& path) {
  write_file(path, serialize_dataset(rows, sheets));
}

Dataset parse_dataset(std::string_view text) {
  Dataset ds;
  std::size_t offset = 0;
  std::size_t line_no = 0;
  bool seen_header = false;
  std::size_t expected_entries = 0;

  auto fail = [&](const std::string& what, std::size_t at) -> void {
    throw ParseError("dataset line " + std::to_string(line_no) + ": " + what, at);
  };

  while (offset < text.size()) {
    std::size_t end = text.find('\n', offset);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(offset, end - offset);
    const std::size_t line_start = offset;
    offset = end + 1;
    ++line_no;
    if (line.empty()) continue;

    json rec;
    try {
      rec = json::parse(line.begin(), line.end());
    } catch (const json::parse_error& e) {
      fail(e.what(), line_start + (e.byte > 0 ? e.byte - 1 : 0));
    }
    if (!rec.is_object()) fail("record must be an object", line_start);

    try {
      if (!seen_header) {
        if (rec.value("format", "") != kFormatName) fail("missing dataset header", line_start);
        if (rec.at("version").get<int>() != kDatasetFormatVersion) {
          fail("unsupported dataset version " + rec.at("version").dump(), line_start);
        }
        seen_header = true;
        continue;
      }
      if (rec.contains("home_team_id")) {
        if (!ds.sheets.empty() && ds.sheets.back().entries.size() != expected_entries) {
          fail("match " + ds.sheets.back().match_id + " has fewer rows than declared", line_start);
        }
        MatchSheet sheet;
        sheet.match_id = rec.at("match_id").get<std::string>();
        sheet.kickoff_date = rec.at("kickoff_date").get<std::string>();
        sheet.league_id = rec.at("league_id").get<std::string>();
        sheet.home_team_id = rec.at("home_team_id").get<std::string>();
        sheet.away_team_id = rec.at("away_team_id").get<std::string>();
        expected_entries = rec.at("n_entries").get<std::size_t>();
        ds.sheets.push_back(std::move(sheet));
        continue;
      }
      if (ds.sheets.empty()) fail("player row before any match record", line_start);
      MatchSheet& sheet = ds.sheets.back();
      PlayerMatchStats row;
      row.match_id = rec.at("match_id").get<std::string>();
      if (row.match_id != sheet.match_id) fail("row belongs to a different match", line_start);
      row.player_id = rec.at("player_id").get<std::string>();
      row.team_id = rec.at("team_id").get<std::string>();
      row.position_id = rec.at("position_id").get<int>();
      row.participated = rec.at("participated").get<bool>();
      for (std::size_t k = 0; k < kNumRawStats; ++k) {
        row.stats[k] = rec.at(std::string(stat_field_name(k))).get<double>();
      }
      sheet.entries.push_back({row.player_id, row.team_id, row.position_id, row.participated});
      ds.rows.push_back(std::move(row));
    } catch (const json::exception& e) {
      fail(e.what(), line_start);
    }
  }
  if (!seen_header) throw ParseError("dataset: empty file, header missing", 0);
  if (!ds.sheets.empty() && ds.sheets.back().entries.size() != expected_entries) {
    throw IntegrityError("dataset: match " + ds.sheets.back().match_id +
                         " has fewer rows than declared");
  }
  assign_kickoff_order(ds);
  return ds;
}

Dataset import_dataset(const std::filesystem::path& path) { return parse_dataset(read_file(path)); }

}  // namespace rb::ingest
