#include "synth.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "rb/features/features.hpp"
#include "rb/ingest/ingest.hpp"

namespace rb::testkit {

namespace {

std::string date_after(int days) {
  using namespace std::chrono;
  const year_month_day d{sys_days{year{2015} / August / 1} + std::chrono::days{days}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                static_cast<unsigned>(d.day()));
  return buf;
}

std::string id(const char* prefix, int a, int b = -1) {
  char buf[32];
  if (b < 0) std::snprintf(buf, sizeof buf, "%s%03d", prefix, a);
  else std::snprintf(buf, sizeof buf, "%s%03d_%02d", prefix, a, b);
  return buf;
}

}  // namespace

ingest::Dataset make_league(const LeagueSpec& spec) {
  Rng rng(spec.seed);
  std::array<double, kNumRawStats> base{};
  for (double& b : base) b = 0.5 + 4.5 * rng.uniform01();

  const int np = spec.n_teams * spec.squad_size;
  std::vector<std::array<double, kNumRawStats>> mean(static_cast<std::size_t>(np));
  for (int t = 0; t < spec.n_teams; ++t) {
    std::array<double, kNumRawStats> team{};
    for (double& f : team) f = std::exp(spec.team_spread * rng.normal());
    for (int k = 0; k < spec.squad_size; ++k) {
      auto& m = mean[static_cast<std::size_t>(t * spec.squad_size + k)];
      for (std::size_t s = 0; s < kNumRawStats; ++s) {
        m[s] = spec.informative_stats ? base[s] * team[s] * std::exp(spec.player_spread * rng.normal()) : base[s];
      }
    }
  }

  ingest::Dataset ds;
  int match_no = 0;
  std::vector<int> teams(static_cast<std::size_t>(spec.n_teams));
  for (int r = 0; r < spec.rounds; ++r) {
    std::iota(teams.begin(), teams.end(), 0);
    rng.shuffle(std::span<int>(teams));
    for (std::size_t i = 0; i + 1 < teams.size(); i += 2) {
      ingest::MatchSheet sheet;
      sheet.match_id = id("m", match_no++);
      sheet.kickoff_date = date_after(r);
      sheet.league_id = "L1";
      sheet.home_team_id = id("t", teams[i]);
      sheet.away_team_id = id("t", teams[i + 1]);
      for (int side = 0; side < 2; ++side) {
        const int t = teams[i + static_cast<std::size_t>(side)];
        for (int k = 0; k < spec.squad_size; ++k) {
          const int code = spec.shared_positions ? k % 25 + 1 : (t * spec.squad_size + k) % 25 + 1;
          ingest::SheetEntry e{id("p", t, k), id("t", t), code, true};
          sheet.entries.push_back(e);
          ingest::PlayerMatchStats row;
          row.match_id = sheet.match_id;
          row.player_id = e.player_id;
          row.team_id = e.team_id;
          row.position_id = code;
          row.participated = true;
          const auto& m = mean[static_cast<std::size_t>(t * spec.squad_size + k)];
          for (std::size_t s = 0; s < kNumRawStats; ++s) {
            row.stats[s] = std::max(0.0, m[s] * (1.0 + spec.noise * rng.normal()));
          }
          ds.rows.push_back(row);
        }
      }
      ds.sheets.push_back(std::move(sheet));
    }
  }
  ingest::assign_kickoff_order(ds);
  return ds;
}

features::TokenizedMatch random_match(Rng& rng, std::size_t n_real, std::size_t seq_len, std::size_t stat_width,
                                      int n_players, int n_teams) {
  features::TokenizedMatch tm;
  tm.match_id = "r";
  tm.n_real = n_real;
  tm.stat_width = stat_width;
  tm.home_team = 0;
  tm.away_team = n_teams > 1 ? 1 : 0;
  tm.tokens.resize(seq_len);
  tm.stats.assign(seq_len * stat_width, 0.0);
  for (std::size_t i = 0; i < seq_len; ++i) {
    features::Token& t = tm.tokens[i];
    if (i < n_real) {
      t.player = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_players)));
      t.position = static_cast<int>(rng.below(features::Vocabulary::kPositionTableSize - 1));
      t.team = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_teams)));
      t.is_pad = false;
      t.participated = true;
      for (std::size_t j = 0; j < stat_width; ++j) tm.stats[i * stat_width + j] = rng.normal();
    } else {
      t.player = n_players + 1;
      t.position = features::Vocabulary::kPadPositionIndex;
      t.team = n_teams;
      t.is_pad = true;
    }
  }
  return tm;
}

}  // namespace rb::testkit
