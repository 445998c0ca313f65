#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rb/common/stats_schema.hpp"
#include "rb/ingest/types.hpp"

namespace rb::features {

/// Dense index space for players, teams and positions.
///
/// Player indices 0..P-1 are real players, P is the MASK token and P+1 the PAD
/// token. Position indices 0..24 map position codes 1..25; index 25 holds squad
/// members without a recorded position and 26 is PAD. Team index T is PAD.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> player_ids, std::vector<std::string> team_ids);

  std::size_t num_players() const noexcept { return player_ids_.size(); }
  std::size_t num_teams() const noexcept { return team_ids_.size(); }
  int mask_index() const noexcept { return static_cast<int>(player_ids_.size()); }
  int pad_index() const noexcept { return static_cast<int>(player_ids_.size()) + 1; }
  std::size_t total_size() const noexcept { return player_ids_.size() + 2; }

  static constexpr int kUnknownPositionIndex = static_cast<int>(kNumPositions);
  static constexpr int kPadPositionIndex = static_cast<int>(kNumPositions) + 1;
  static constexpr std::size_t kPositionTableSize = kNumPositions + 2;

  int pad_team_index() const noexcept { return static_cast<int>(team_ids_.size()); }
  std::size_t team_table_size() const noexcept { return team_ids_.size() + 1; }

  /// Throws IntegrityError for ids outside the vocabulary.
  int player_index(const std::string& id) const;
  int team_index(const std::string& id) const;
  static int position_index(int position_code);
  /// Position code (1..25) for a position index below kNumPositions.
  static int position_code(int position_index) { return position_index + 1; }

  const std::vector<std::string>& player_ids() const noexcept { return player_ids_; }
  const std::vector<std::string>& team_ids() const noexcept { return team_ids_; }
  const std::string& player_id(int index) const { return player_ids_.at(static_cast<std::size_t>(index)); }

  bool contains_player(const std::string& id) const { return player_lookup_.contains(id); }

  bool operator==(const Vocabulary& o) const {
    return player_ids_ == o.player_ids_ && team_ids_ == o.team_ids_;
  }

 private:
  std::vector<std::string> player_ids_;
  std::vector<std::string> team_ids_;
  std::unordered_map<std::string, int> player_lookup_;
  std::unordered_map<std::string, int> team_lookup_;
};

/// Distinct players and teams of the dataset, each in sorted id order.
/// Throws IntegrityError on an empty dataset.
Vocabulary build_vocabulary(const ingest::Dataset& dataset);

std::string serialize_vocabulary(const Vocabulary& vocab);
Vocabulary parse_vocabulary(std::string_view text);
void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path);
Vocabulary load_vocabulary(const std::filesystem::path& path);

struct Token {
  int player = 0;
  int position = 0;
  int team = 0;
  bool is_pad = true;
  bool participated = false;

  bool operator==(const Token&) const = default;
};

/// One match as a fixed-length token sequence: home squad, away squad, then PAD.
struct TokenizedMatch {
  std::string match_id;
  std::int64_t kickoff_order = 0;
  int home_team = 0;
  int away_team = 0;
  std::size_t n_real = 0;
  std::size_t stat_width = kNumRawStats;
  std::vector<Token> tokens;  // size kSequenceLength
  std::vector<double> stats;  // row-major [kSequenceLength, stat_width]; zero on PAD rows

  std::span<const double> stat_row(std::size_t i) const {
    return std::span<const double>(stats).subspan(i * stat_width, stat_width);
  }
  bool operator==(const TokenizedMatch&) const = default;
};

/// Rows of each match, keyed by match id, in dataset order.
using RowIndex = std::unordered_map<std::string, std::vector<const ingest::PlayerMatchStats*>>;
RowIndex index_rows(const ingest::Dataset& dataset);

/// Rows of one match in dataset order.
std::vector<const ingest::PlayerMatchStats*> rows_of(const ingest::Dataset& dataset,
                                                     const std::string& match_id);

/// Raw-statistics tokenization. Throws CapacityError when the squad exceeds the
/// sequence length and IntegrityError when ids are missing from the vocabulary.
TokenizedMatch tokenize(std::span<const ingest::PlayerMatchStats* const> rows,
                        const ingest::MatchSheet& sheet, const Vocabulary& vocab,
                        std::size_t seq_len = kSequenceLength);

/// Tokenizes every match of the dataset, in dataset (chronological) order.
std::vector<std::shared_ptr<const TokenizedMatch>> tokenize_dataset(const ingest::Dataset& dataset,
                                                                    const Vocabulary& vocab);

enum class MaskEligibility { AnyRealToken, ParticipantsOnly };

struct MaskedMatch {
  std::shared_ptr<const TokenizedMatch> base;
  std::vector<int> masked_positions;  // ascending token indices
  std::vector<int> targets;           // true player index per masked position

  /// Player indices fed to the model: MASK at masked positions.
  std::vector<int> input_players(int mask_index) const;
};

/// Number of positions to mask: max(1, round-half-up(rate * n)), capped at n.
std::size_t mask_count(std::size_t n_eligible, double mask_rate);

/// k independently masked copies of a match. Copy i draws from a stream derived
/// from (seed, match id, i), so results do not depend on processing order.
std::vector<MaskedMatch> augment_mpp(std::shared_ptr<const TokenizedMatch> tm, int k,
                                     double mask_rate, std::uint64_t seed,
                                     MaskEligibility eligibility = MaskEligibility::AnyRealToken);

using FeatureVector = std::array<double, kNmspFeatureWidth>;

/// Season-to-date and last-5 aggregates (sum, mean, population std) over the
/// history rows whose kickoff order precedes `target_order`. Layout:
/// [season_sum | season_mean | season_std | last5_sum | last5_mean | last5_std].
FeatureVector aggregate_nmsp_features(std::span<const ingest::PlayerMatchStats* const> history,
                                      std::int64_t target_order);

using TeamStats = std::array<double, kNumTeamStats>;

/// The 18 report statistics summed over one team's squad rows.
TeamStats team_stats(std::span<const ingest::PlayerMatchStats* const> rows, const std::string& team_id);

/// Home team's 18 statistics followed by the away team's. Throws IntegrityError when a
/// row belongs to neither team.
std::array<double, kNmspTargetWidth> team_targets(std::span<const ingest::PlayerMatchStats* const> rows,
                                                  const ingest::MatchSheet& sheet);

struct NmspExample {
  TokenizedMatch tokens;  // stat_width == kNmspFeatureWidth
  std::array<double, kNmspTargetWidth> target{};
  std::optional<std::array<double, kNmspTargetWidth>> baseline;  // last-5 forecast when defined
};

struct NmspBuildOptions {
  /// Only participated matches enter a player's aggregation windows.
  bool participations_only = true;
  /// Skip matches where either team has no previous match (no baseline defined).
  bool require_team_history = true;
};

std::vector<NmspExample> build_nmsp_examples(const ingest::Dataset& dataset, const Vocabulary& vocab,
                                             const NmspBuildOptions& options = {});

enum class SplitMode { Random, Chronological };

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Partition of n items: floor(ratio * n) go to train (clamped so both sides are
/// non-empty). Chronological mode orders by `kickoff_orders` so every validation
/// item is no earlier than every training item. Throws ConfigError for ratio
/// outside (0, 1) and IntegrityError for fewer than two items.
SplitIndices split_dataset(std::span<const std::int64_t> kickoff_orders, double ratio,
                           SplitMode mode, std::uint64_t seed);

}  // namespace rb::features
