#include "rb/features/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rb/analytics/analytics.hpp"
#include "rb/common/error.hpp"
#include "rb/common/rng.hpp"

namespace rb::features {

using ingest::Dataset;
using ingest::MatchSheet;
using ingest::PlayerMatchStats;

RowIndex index_rows(const Dataset& dataset) {
  RowIndex index;
  for (const PlayerMatchStats& r : dataset.rows) index[r.match_id].push_back(&r);
  return index;
}

std::vector<const PlayerMatchStats*> rows_of(const Dataset& dataset, const std::string& match_id) {
  std::vector<const PlayerMatchStats*> out;
  for (const PlayerMatchStats& r : dataset.rows) {
    if (r.match_id == match_id) out.push_back(&r);
  }
  return out;
}

namespace {

// Home squad then away squad, each in sheet order.
std::vector<const PlayerMatchStats*> squad_order(std::span<const PlayerMatchStats* const> rows,
                                                 const MatchSheet& sheet) {
  std::vector<const PlayerMatchStats*> ordered;
  ordered.reserve(rows.size());
  for (const std::string* team : {&sheet.home_team_id, &sheet.away_team_id}) {
    for (const PlayerMatchStats* r : rows) {
      if (r->team_id == *team) ordered.push_back(r);
    }
  }
  if (ordered.size() != rows.size()) {
    throw IntegrityError("match " + sheet.match_id + ": a row belongs to neither playing team");
  }
  return ordered;
}

TokenizedMatch empty_sequence(const MatchSheet& sheet, const Vocabulary& vocab, std::size_t n_real,
                              std::size_t stat_width, std::size_t seq_len) {
  if (n_real > seq_len) {
    throw CapacityError("match " + sheet.match_id + ": squad of " + std::to_string(n_real) +
                        " exceeds sequence length " + std::to_string(seq_len));
  }
  TokenizedMatch tm;
  tm.match_id = sheet.match_id;
  tm.home_team = vocab.team_index(sheet.home_team_id);
  tm.away_team = vocab.team_index(sheet.away_team_id);
  tm.n_real = n_real;
  tm.stat_width = stat_width;
  tm.tokens.assign(seq_len, Token{vocab.pad_index(), Vocabulary::kPadPositionIndex,
                                  vocab.pad_team_index(), true, false});
  tm.stats.assign(seq_len * stat_width, 0.0);
  return tm;
}

Token real_token(const PlayerMatchStats& r, const Vocabulary& vocab) {
  return Token{vocab.player_index(r.player_id), Vocabulary::position_index(r.position_id),
               vocab.team_index(r.team_id), false, r.participated};
}

}  // namespace

TokenizedMatch tokenize(std::span<const PlayerMatchStats* const> rows, const MatchSheet& sheet,
                        const Vocabulary& vocab, std::size_t seq_len) {
  TokenizedMatch tm = empty_sequence(sheet, vocab, rows.size(), kNumRawStats, seq_len);
  const auto ordered = squad_order(rows, sheet);
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const PlayerMatchStats& r = *ordered[i];
    tm.kickoff_order = r.kickoff_order;
    tm.tokens[i] = real_token(r, vocab);
    std::copy(r.stats.begin(), r.stats.end(), tm.stats.begin() + static_cast<std::ptrdiff_t>(i * kNumRawStats));
  }
  return tm;
}

std::vector<std::shared_ptr<const TokenizedMatch>> tokenize_dataset(const Dataset& dataset,
                                                                    const Vocabulary& vocab) {
  const RowIndex index = index_rows(dataset);
  std::vector<std::shared_ptr<const TokenizedMatch>> out;
  out.reserve(dataset.sheets.size());
  for (const MatchSheet& sheet : dataset.sheets) {
    auto it = index.find(sheet.match_id);
    const std::vector<const PlayerMatchStats*> none;
    const auto& rows = it == index.end() ? none : it->second;
    out.push_back(std::make_shared<const TokenizedMatch>(tokenize(rows, sheet, vocab)));
  }
  return out;
}

std::vector<int> MaskedMatch::input_players(int mask_index) const {
  std::vector<int> players(base->tokens.size());
  for (std::size_t i = 0; i < players.size(); ++i) players[i] = base->tokens[i].player;
  for (int pos : masked_positions) players[static_cast<std::size_t>(pos)] = mask_index;
  return players;
}

std::size_t mask_count(std::size_t n_eligible, double mask_rate) {
  if (n_eligible == 0) return 0;
  const auto rounded = static_cast<std::size_t>(std::floor(mask_rate * static_cast<double>(n_eligible) + 0.5));
  return std::min(n_eligible, std::max<std::size_t>(1, rounded));
}

std::vector<MaskedMatch> augment_mpp(std::shared_ptr<const TokenizedMatch> tm, int k, double mask_rate,
                                     std::uint64_t seed, MaskEligibility eligibility) {
  if (k < 1) throw ConfigError("augmentation factor must be >= 1");
  if (!(mask_rate > 0.0 && mask_rate < 1.0)) throw ConfigError("mask rate must lie in (0, 1)");

  std::vector<int> eligible;
  for (std::size_t i = 0; i < tm->n_real; ++i) {
    const Token& t = tm->tokens[i];
    if (t.is_pad) continue;
    if (eligibility == MaskEligibility::ParticipantsOnly && !t.participated) continue;
    eligible.push_back(static_cast<int>(i));
  }
  const std::size_t m = mask_count(eligible.size(), mask_rate);

  std::vector<MaskedMatch> out;
  out.reserve(static_cast<std::size_t>(k));
  const std::uint64_t match_seed = derive_seed(seed, "mpp-mask/" + tm->match_id);
  for (int copy = 0; copy < k; ++copy) {
    Rng rng(derive_seed(match_seed, static_cast<std::uint64_t>(copy)));
    std::vector<int> pool = eligible;
    // Partial Fisher-Yates: the first m slots become the masked set.
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    MaskedMatch mm;
    mm.base = tm;
    mm.masked_positions.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m));
    std::sort(mm.masked_positions.begin(), mm.masked_positions.end());
    for (int pos : mm.masked_positions) mm.targets.push_back(tm->tokens[static_cast<std::size_t>(pos)].player);
    out.push_back(std::move(mm));
  }
  return out;
}

namespace {

// Writes sum/mean/std blocks for one window into `out` at block offset `first_block`.
void window_aggregates(std::span<const PlayerMatchStats* const> window, FeatureVector& out,
                       std::size_t first_block) {
  const std::size_t n = window.size();
  if (n == 0) return;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t s = 0; s < kNumRawStats; ++s) {
    double sum = 0.0;
    for (const PlayerMatchStats* r : window) sum += r->stats[s];
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (const PlayerMatchStats* r : window) {
      const double d = r->stats[s] - mean;
      sq += d * d;
    }
    out[(first_block + 0) * kNumRawStats + s] = sum;
    out[(first_block + 1) * kNumRawStats + s] = mean;
    out[(first_block + 2) * kNumRawStats + s] = std::sqrt(sq * inv_n);
  }
}

}  // namespace

FeatureVector aggregate_nmsp_features(std::span<const PlayerMatchStats* const> history,
                                      std::int64_t target_order) {
  std::vector<const PlayerMatchStats*> prior;
  prior.reserve(history.size());
  for (const PlayerMatchStats* r : history) {
    if (r->kickoff_order < target_order) prior.push_back(r);
  }
  FeatureVector out{};
  window_aggregates(prior, out, 0);
  const std::size_t last = std::min<std::size_t>(5, prior.size());
  window_aggregates(std::span<const PlayerMatchStats* const>(prior).last(last), out, 3);
  return out;
}

TeamStats team_stats(std::span<const PlayerMatchStats* const> rows, const std::string& team_id) {
  TeamStats out{};
  for (const PlayerMatchStats* r : rows) {
    if (r->team_id != team_id) continue;
    for (std::size_t j = 0; j < kNumTeamStats; ++j) out[j] += (*r)[kTeamTargetStats[j]];
  }
  return out;
}

std::array<double, kNmspTargetWidth> team_targets(std::span<const PlayerMatchStats* const> rows,
                                                  const MatchSheet& sheet) {
  for (const PlayerMatchStats* r : rows) {
    if (r->team_id != sheet.home_team_id && r->team_id != sheet.away_team_id) {
      throw IntegrityError("match " + sheet.match_id + ": unknown team id " + r->team_id);
    }
  }
  std::array<double, kNmspTargetWidth> out{};
  const TeamStats home = team_stats(rows, sheet.home_team_id);
  const TeamStats away = team_stats(rows, sheet.away_team_id);
  std::copy(home.begin(), home.end(), out.begin());
  std::copy(away.begin(), away.end(), out.begin() + kNumTeamStats);
  return out;
}

std::vector<NmspExample> build_nmsp_examples(const Dataset& dataset, const Vocabulary& vocab,
                                             const NmspBuildOptions& options) {
  const RowIndex index = index_rows(dataset);

  // Chronological per-player histories (dataset rows are already in kickoff order).
  std::unordered_map<std::string, std::vector<const PlayerMatchStats*>> histories;
  for (const PlayerMatchStats& r : dataset.rows) {
    if (options.participations_only && !r.participated) continue;
    histories[r.player_id].push_back(&r);
  }

  std::unordered_map<std::string, std::vector<std::vector<double>>> team_history;
  const std::vector<const PlayerMatchStats*> none;

  std::vector<NmspExample> out;
  for (const MatchSheet& sheet : dataset.sheets) {
    auto it = index.find(sheet.match_id);
    const auto& rows = it == index.end() ? none : it->second;
    const std::int64_t order = rows.empty() ? 0 : rows.front()->kickoff_order;

    auto& home_hist = team_history[sheet.home_team_id];
    auto& away_hist = team_history[sheet.away_team_id];
    const auto home_base = analytics::baseline_last5(home_hist, home_hist.size());
    const auto away_base = analytics::baseline_last5(away_hist, away_hist.size());
    const bool has_history = home_base.has_value() && away_base.has_value();

    if (has_history || !options.require_team_history) {
      NmspExample ex;
      ex.tokens = empty_sequence(sheet, vocab, rows.size(), kNmspFeatureWidth, kSequenceLength);
      ex.tokens.kickoff_order = order;
      const auto ordered = squad_order(rows, sheet);
      for (std::size_t i = 0; i < ordered.size(); ++i) {
        const PlayerMatchStats& r = *ordered[i];
        ex.tokens.tokens[i] = real_token(r, vocab);
        auto h = histories.find(r.player_id);
        if (h == histories.end()) continue;
        const FeatureVector f = aggregate_nmsp_features(h->second, order);
        std::copy(f.begin(), f.end(),
                  ex.tokens.stats.begin() + static_cast<std::ptrdiff_t>(i * kNmspFeatureWidth));
      }
      ex.target = team_targets(rows, sheet);
      if (has_history) {
        std::array<double, kNmspTargetWidth> b{};
        std::copy(home_base->begin(), home_base->end(), b.begin());
        std::copy(away_base->begin(), away_base->end(), b.begin() + kNumTeamStats);
        ex.baseline = b;
      }
      out.push_back(std::move(ex));
    }

    const TeamStats hs = team_stats(rows, sheet.home_team_id);
    const TeamStats as = team_stats(rows, sheet.away_team_id);
    home_hist.emplace_back(hs.begin(), hs.end());
    away_hist.emplace_back(as.begin(), as.end());
  }
  return out;
}

SplitIndices split_dataset(std::span<const std::int64_t> kickoff_orders, double ratio, SplitMode mode,
                           std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must lie in (0, 1)");
  const std::size_t n = kickoff_orders.size();
  if (n < 2) throw IntegrityError("cannot split fewer than two items");

  std::size_t n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (mode == SplitMode::Random) {
    Rng rng(derive_seed(seed, "split"));
    rng.shuffle(std::span<std::size_t>(order));
  } else {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return kickoff_orders[a] < kickoff_orders[b];
    });
  }
  SplitIndices out;
  out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  if (mode == SplitMode::Random) {
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.validation.begin(), out.validation.end());
  }
  return out;
}

}  // namespace rb::features
