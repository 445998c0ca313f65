#include <gtest/gtest.h>

#include <filesystem>
#include <map>

#include <nlohmann/json.hpp>

#include "rb/common/digest.hpp"
#include "rb/common/error.hpp"
#include "rb/ingest/dataset_io.hpp"
#include "rb/ingest/ingest.hpp"
#include "synth.hpp"

using namespace rb;
using namespace rb::ingest;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = RB_FIXTURE_DIR;

double stat(const PlayerMatchStats& r, const std::string& name) {
  for (std::size_t i = 0; i < kNumRawStats; ++i)
    if (kStatNames[i] == name) return r.stats[i];
  ADD_FAILURE() << "no stat " << name;
  return -1;
}

const PlayerMatchStats& row(const std::vector<PlayerMatchStats>& rows, const std::string& id) {
  for (const auto& r : rows)
    if (r.player_id == id) return r;
  throw std::runtime_error("no row " + id);
}

std::vector<PlayerMatchStats> load_fixture_match(const std::string& events, const std::string& lineup) {
  const auto parsed = parse_events(read_file(kFixtures / events), "native");
  const MatchSheet sheet = find_adapter("native").parse_lineup(read_file(kFixtures / lineup), "", {});
  return compute_player_stats(parsed.events, sheet);
}

// Tally straight from the event JSON: each type has a stat prefix; "<prefix>_total"
// counts events, "<prefix>_<flag>" counts true flags, and the won/complete flags
// split into their complements when false.
std::map<std::string, std::map<std::string, double>> oracle_tally(const nlohmann::json& doc) {
  const std::map<std::string, std::string> prefix = {
      {"Pass", "pass"}, {"Shot", "shot"}, {"Interception", "interception"}, {"Dribble", "dribble"},
      {"FoulWon", "foul_won"}, {"FoulCommitted", "foul_committed"}, {"GoalkeeperAction", "goalkeeper"},
      {"Block", "block"}, {"Clearance", "clearance"}, {"BallRecovery", "ball_recovery"},
      {"CounterpressTag", "counterpress"}};
  const std::map<std::string, std::string> complement = {{"won", "lost"}, {"complete", "incomplete"}};
  std::map<std::string, std::map<std::string, double>> out;
  for (const auto& e : doc.at("events")) {
    const std::string type = e.at("type");
    if (!prefix.contains(type)) continue;
    if (e.contains("attributes") && e["attributes"].value("own_goal", false)) continue;
    auto& t = out[e.at("player_id").get<std::string>()];
    const std::string p = prefix.at(type);
    if (type != "GoalkeeperAction") t[p + "_total"] += 1;
    if (type == "Shot") t["shot_statsbomb_xg"] += e.at("xg").get<double>();
    if (e.contains("attributes")) {
      for (auto it = e["attributes"].begin(); it != e["attributes"].end(); ++it) {
        if (it.value().get<bool>()) t[p + "_" + it.key()] += 1;
        else if (complement.contains(it.key())) t[p + "_" + complement.at(it.key())] += 1;
      }
    }
    if ((type == "Interception" || type == "Dribble") &&
        !(e.contains("attributes") && e["attributes"].contains(type == "Interception" ? "won" : "complete"))) {
      t[p + "_" + (type == "Interception" ? "lost" : "incomplete")] += 1;
    }
  }
  return out;
}

}  // namespace

TEST(PlayerStats, AllElevenEventTypes) {
  const auto rows = load_fixture_match("single_events.json", "single_lineup.json");
  ASSERT_EQ(rows.size(), 5u);
  const auto& a1 = row(rows, "A1");
  EXPECT_EQ(stat(a1, "pass_total"), 1);
  EXPECT_EQ(stat(a1, "pass_cross"), 1);
  EXPECT_EQ(stat(a1, "pass_shot_assist"), 1);
  EXPECT_EQ(stat(a1, "ball_recovery_total"), 1);
  EXPECT_EQ(stat(a1, "counterpress_total"), 1);
  const auto& a2 = row(rows, "A2");
  EXPECT_EQ(stat(a2, "shot_total"), 2);
  EXPECT_NEAR(stat(a2, "shot_statsbomb_xg"), 1.11, 1e-12);
  EXPECT_EQ(stat(a2, "shot_open_play"), 1);
  EXPECT_EQ(stat(a2, "shot_saved"), 1);
  EXPECT_EQ(stat(a2, "shot_penalty"), 1);
  EXPECT_EQ(stat(a2, "shot_goal"), 1);
  EXPECT_EQ(stat(a2, "dribble_total"), 1);
  EXPECT_EQ(stat(a2, "dribble_incomplete"), 1);
  EXPECT_EQ(stat(a2, "dribble_complete"), 0);
  EXPECT_EQ(stat(a2, "foul_won_total"), 1);
  EXPECT_EQ(stat(a2, "foul_won_penalty"), 1);
  const auto& b1 = row(rows, "B1");
  EXPECT_EQ(stat(b1, "goalkeeper_save"), 1);
  EXPECT_EQ(stat(b1, "goalkeeper_shot_faced"), 1);
  EXPECT_EQ(stat(b1, "goalkeeper_goal_conceded"), 0);
  const auto& b2 = row(rows, "B2");
  EXPECT_EQ(stat(b2, "interception_total"), 1);
  EXPECT_EQ(stat(b2, "interception_won"), 1);
  EXPECT_EQ(stat(b2, "foul_committed_total"), 1);
  EXPECT_EQ(stat(b2, "foul_committed_penalty"), 1);
  EXPECT_EQ(stat(b2, "foul_committed_yellow_card"), 1);
  EXPECT_EQ(stat(b2, "block_total"), 1);
  EXPECT_EQ(stat(b2, "clearance_total"), 1);
}

TEST(PlayerStats, EventMarksParticipation) {
  const auto rows = load_fixture_match("single_events.json", "single_lineup.json");
  EXPECT_TRUE(row(rows, "A1").participated);
  EXPECT_FALSE(row(rows, "A3").participated);
  for (double v : row(rows, "A3").stats) EXPECT_EQ(v, 0.0);
}

TEST(PlayerStats, FortyEventTallyMatchesOracle) {
  const std::string text = read_file(kFixtures / "league/events/M1.json");
  const auto doc = nlohmann::json::parse(text);
  ASSERT_EQ(doc.at("events").size(), 40u);
  const auto rows = load_fixture_match("league/events/M1.json", "league/lineups/M1.json");
  const auto expect = oracle_tally(doc);
  for (const auto& r : rows) {
    for (std::size_t s = 0; s < kNumRawStats; ++s) {
      double want = 0;
      if (auto it = expect.find(r.player_id); it != expect.end()) {
        if (auto jt = it->second.find(std::string(kStatNames[s])); jt != it->second.end()) want = jt->second;
      }
      EXPECT_NEAR(r.stats[s], want, 1e-12) << r.player_id << " " << kStatNames[s];
    }
  }
}

TEST(PlayerStats, OwnGoalsAndUnmappedTypesDropped) {
  const auto parsed = parse_events(read_file(kFixtures / "league/events/M2.json"), "native");
  EXPECT_EQ(parsed.dropped, 2u);
  EXPECT_EQ(parsed.events.size(), 24u);
}

TEST(PlayerStats, UnknownPlayerIsIntegrityError) {
  MatchSheet sheet{"m", "2015-01-01", "L", "A", "B", {{"a", "A", 1, true}}};
  NormalizedEvent ev;
  ev.match_id = "m";
  ev.player_id = "ghost";
  ev.team_id = "A";
  EXPECT_THROW(compute_player_stats({ev}, sheet), IntegrityError);
}

TEST(PlayerStats, DuplicateSheetEntryRejected) {
  MatchSheet sheet{"m", "2015-01-01", "L", "A", "B", {{"a", "A", 1, true}, {"a", "A", 2, true}}};
  EXPECT_THROW(compute_player_stats({}, sheet), IntegrityError);
}

TEST(Adapters, NativeRejectsMalformedJson) {
  EXPECT_THROW(parse_events("{\"events\": [", "native"), ParseError);
  EXPECT_THROW(parse_events("[]", "native"), IntegrityError);
  EXPECT_THROW(parse_events(R"({"events":[{"type":"Shot","player_id":"a","team_id":"A"}]})", "native"),
               IntegrityError);
}

TEST(Adapters, UnknownAdapterIsConfigError) { EXPECT_THROW(find_adapter("opta"), ConfigError); }

TEST(Adapters, EventsSortedByIndex) {
  const auto parsed = parse_events(R"({"events":[
    {"index":2,"type":"Block","player_id":"a","team_id":"A"},
    {"index":1,"type":"Clearance","player_id":"b","team_id":"A"}]})",
                                   "native", "m");
  ASSERT_EQ(parsed.events.size(), 2u);
  EXPECT_EQ(parsed.events[0].type, EventType::Clearance);
  EXPECT_EQ(parsed.events[0].match_id, "m");
}

TEST(Adapters, StatsBombTranslation) {
  const std::string events = R"([
    {"index":1,"period":1,"type":{"name":"Pass"},"player":{"id":10},"team":{"id":1},
     "pass":{"cross":true,"outcome":{"name":"Incomplete"}}},
    {"index":2,"period":1,"type":{"name":"Shot"},"player":{"id":11},"team":{"id":1},
     "shot":{"statsbomb_xg":0.25,"type":{"name":"Open Play"},"outcome":{"name":"Goal"}}},
    {"index":3,"period":1,"type":{"name":"Pressure"},"player":{"id":20},"team":{"id":2},"counterpress":true},
    {"index":4,"period":5,"type":{"name":"Shot"},"player":{"id":11},"team":{"id":1},
     "shot":{"statsbomb_xg":0.7,"type":{"name":"Penalty"},"outcome":{"name":"Goal"}}},
    {"index":5,"period":1,"type":{"name":"Own Goal For"},"player":{"id":20},"team":{"id":2}},
    {"index":6,"period":1,"type":{"name":"Starting XI"},"team":{"id":2}}
  ])";
  const auto parsed = parse_events(events, "statsbomb", "99");
  ASSERT_EQ(parsed.events.size(), 3u);
  EXPECT_EQ(parsed.events[0].type, EventType::Pass);
  EXPECT_TRUE(parsed.events[0].flag("cross"));
  EXPECT_TRUE(parsed.events[0].flag("incomplete"));
  EXPECT_EQ(parsed.events[1].type, EventType::Shot);
  EXPECT_DOUBLE_EQ(*parsed.events[1].xg, 0.25);
  EXPECT_TRUE(parsed.events[1].flag("goal"));
  EXPECT_EQ(parsed.events[2].type, EventType::CounterpressTag);
  EXPECT_EQ(parsed.events[2].player_id, "20");
  EXPECT_EQ(parsed.dropped, 4u);

  const auto& sb = find_adapter("statsbomb");
  const auto meta = sb.parse_metadata(R"([{"match_id":99,"match_date":"2015-09-01",
    "competition":{"competition_id":2},"home_team":{"home_team_id":1},"away_team":{"away_team_id":2}}])");
  const MatchSheet sheet = sb.parse_lineup(R"([
    {"team_id":2,"lineup":[{"player_id":20,"positions":[{"position_id":3}]},{"player_id":21,"positions":[]}]},
    {"team_id":1,"lineup":[{"player_id":10,"positions":[{"position_id":9}]},{"player_id":11,"positions":[{"position_id":23}]}]}
  ])",
                                           "99", meta);
  EXPECT_EQ(sheet.home_team_id, "1");
  ASSERT_EQ(sheet.entries.size(), 4u);
  EXPECT_EQ(sheet.entries[0].player_id, "10");
  EXPECT_EQ(sheet.entries[3].position_id, kUnknownPositionCode);
  EXPECT_FALSE(sheet.entries[3].participated);
  EXPECT_THROW(sb.parse_lineup("[]", "100", meta), IntegrityError);
}

TEST(IngestDirectory, FixtureSummary) {
  IngestSummary s;
  const Dataset ds = ingest_directory(kFixtures / "league/events", kFixtures / "league/lineups", "native", {}, &s);
  EXPECT_EQ(s.matches, 2u);
  EXPECT_EQ(s.players, 40u);
  EXPECT_EQ(s.teams, 4u);
  EXPECT_EQ(s.events, 64u);
  EXPECT_EQ(s.dropped_events, 2u);
  EXPECT_EQ(ds.rows.size(), 40u);
  EXPECT_EQ(ds.sheets[0].match_id, "M1");
  EXPECT_EQ(ds.rows.front().kickoff_order, 0);
  EXPECT_EQ(ds.rows.back().kickoff_order, 1);
}

TEST(IngestDirectory, EmptyDirectory) {
  try {
    ingest_directory(kFixtures / "empty", kFixtures / "empty", "native", {}, nullptr);
    FAIL();
  } catch (const IntegrityError& e) {
    EXPECT_NE(std::string(e.what()).find("no event files found"), std::string::npos);
  }
}

TEST(KickoffOrder, ChronologicalWithIdTieBreak) {
  Dataset ds;
  ds.sheets = {{"b", "2015-09-01", "L", "A", "B", {}}, {"a", "2015-09-01", "L", "C", "D", {}},
               {"c", "2015-08-01", "L", "A", "C", {}}};
  assign_kickoff_order(ds);
  EXPECT_EQ(ds.sheets[0].match_id, "c");
  EXPECT_EQ(ds.sheets[1].match_id, "a");
  EXPECT_EQ(ds.sheets[2].match_id, "b");
}

TEST(DatasetIo, RoundTrip) {
  testkit::LeagueSpec spec;
  spec.n_teams = 4;
  spec.rounds = 3;
  const Dataset ds = testkit::make_league(spec);
  const std::string text = serialize_dataset(ds.rows, ds.sheets);
  const Dataset back = parse_dataset(text);
  EXPECT_EQ(back.sheets, ds.sheets);
  ASSERT_EQ(back.rows.size(), ds.rows.size());
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].player_id, ds.rows[i].player_id);
    EXPECT_EQ(back.rows[i].kickoff_order, ds.rows[i].kickoff_order);
    EXPECT_EQ(back.rows[i].stats, ds.rows[i].stats);
  }
  EXPECT_EQ(serialize_dataset(back.rows, back.sheets), text);
}

TEST(DatasetIo, CorruptLineReportsOffset) {
  testkit::LeagueSpec spec;
  spec.n_teams = 2;
  spec.rounds = 1;
  const Dataset ds = testkit::make_league(spec);
  std::string text = serialize_dataset(ds.rows, ds.sheets);
  const std::size_t cut = text.find('\n', text.find('\n') + 1);
  text.insert(cut + 1, "{broken\n");
  try {
    parse_dataset(text);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_GE(e.byte_offset(), cut);
  }
}

TEST(DatasetIo, MissingRowRejected) {
  testkit::LeagueSpec spec;
  spec.n_teams = 2;
  spec.rounds = 1;
  Dataset ds = testkit::make_league(spec);
  ds.rows.pop_back();
  EXPECT_THROW(serialize_dataset(ds.rows, ds.sheets), IntegrityError);
}
