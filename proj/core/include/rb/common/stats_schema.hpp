#pragma once

#include <array>
#include <cstddef>
#include <string_view>

namespace rb {

inline constexpr std::size_t kNumRawStats = 39;
inline constexpr std::size_t kNumTeamStats = 18;
inline constexpr std::size_t kNumAggregateBlocks = 6;
inline constexpr std::size_t kNmspFeatureWidth = kNumRawStats * kNumAggregateBlocks;  // 234
inline constexpr std::size_t kNmspTargetWidth = 2 * kNumTeamStats;                   // 36
inline constexpr std::size_t kSequenceLength = 80;
inline constexpr std::size_t kNumPositions = 25;

/// Canonical order of the per-player match statistics.
enum class Stat : std::size_t {
  PassTotal,
  PassCross,
  PassCutBack,
  PassShotAssist,
  PassGoalAssist,
  PassNoTouch,
  PassInterception,
  PassIncomplete,
  PassOffside,
  PassThroughBall,
  ShotTotal,
  ShotXg,
  ShotCorner,
  ShotFreeKick,
  ShotOpenPlay,
  ShotPenalty,
  ShotSaved,
  ShotOffTarget,
  ShotBlocked,
  ShotGoal,
  InterceptionTotal,
  InterceptionWon,
  InterceptionLost,
  DribbleTotal,
  DribbleComplete,
  DribbleIncomplete,
  FoulWonTotal,
  FoulWonPenalty,
  FoulCommittedTotal,
  FoulCommittedPenalty,
  FoulCommittedYellowCard,
  FoulCommittedRedCard,
  GoalkeeperGoalConceded,
  GoalkeeperSave,
  GoalkeeperShotFaced,
  BlockTotal,
  ClearanceTotal,
  BallRecoveryTotal,
  CounterpressTotal,
};

constexpr std::size_t index_of(Stat s) noexcept { return static_cast<std::size_t>(s); }

inline constexpr std::array<std::string_view, kNumRawStats> kStatNames = {
    "pass_total",
    "pass_cross",
    "pass_cut_back",
    "pass_shot_assist",
    "pass_goal_assist",
    "pass_no_touch",
    "pass_interception",
    "pass_incomplete",
    "pass_offside",
    "pass_through_ball",
    "shot_total",
    "shot_statsbomb_xg",
    "shot_corner",
    "shot_free_kick",
    "shot_open_play",
    "shot_penalty",
    "shot_saved",
    "shot_off_target",
    "shot_blocked",
    "shot_goal",
    "interception_total",
    "interception_won",
    "interception_lost",
    "dribble_total",
    "dribble_complete",
    "dribble_incomplete",
    "foul_won_total",
    "foul_won_penalty",
    "foul_committed_total",
    "foul_committed_penalty",
    "foul_committed_yellow_card",
    "foul_committed_red_card",
    "goalkeeper_goal_conceded",
    "goalkeeper_save",
    "goalkeeper_shot_faced",
    "block_total",
    "clearance_total",
    "ball_recovery_total",
    "counterpress_total",
};

/// The 18 team-level statistics predicted for each side of a match, in report order.
inline constexpr std::array<Stat, kNumTeamStats> kTeamTargetStats = {
    Stat::PassTotal,        Stat::PassCross,         Stat::PassShotAssist,
    Stat::PassGoalAssist,   Stat::PassThroughBall,   Stat::ShotTotal,
    Stat::ShotXg,           Stat::ShotGoal,          Stat::InterceptionWon,
    Stat::BlockTotal,       Stat::ClearanceTotal,    Stat::BallRecoveryTotal,
    Stat::CounterpressTotal, Stat::DribbleComplete,  Stat::FoulWonTotal,
    Stat::FoulCommittedTotal, Stat::GoalkeeperSave,  Stat::GoalkeeperShotFaced,
};

/// Display labels used in the per-statistic report.
inline constexpr std::array<std::string_view, kNumTeamStats> kTeamTargetLabels = {
    "Pass total",          "Pass cross",        "Pass shot assist", "Pass goal assist",
    "Pass through ball",   "Shot total",        "Shot xG",          "Shot goal",
    "Interception won",    "Block won",         "Clearance total",  "Ball recovery total",
    "Counterpress total",  "Dribble complete",  "Foul won total",   "Foul committed total",
    "Keeper save",         "Keeper shot saved",
};

/// Column label "sNN" of a stat in the dataset file.
inline std::string_view stat_field_name(std::size_t i) {
  static constexpr std::array<std::string_view, kNumRawStats> kFields = {
      "s00", "s01", "s02", "s03", "s04", "s05", "s06", "s07", "s08", "s09",
      "s10", "s11", "s12", "s13", "s14", "s15", "s16", "s17", "s18", "s19",
      "s20", "s21", "s22", "s23", "s24", "s25", "s26", "s27", "s28", "s29",
      "s30", "s31", "s32", "s33", "s34", "s35", "s36", "s37", "s38"};
  return kFields.at(i);
}

}  // namespace rb
