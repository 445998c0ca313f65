#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "rb/common/error.hpp"
#include "rb/common/rng.hpp"
#include "rb/features/corpus_io.hpp"
#include "rb/features/features.hpp"
#include "synth.hpp"

using namespace rb;
using namespace rb::features;
using ingest::PlayerMatchStats;

namespace {

ingest::Dataset small_league(std::uint64_t seed = 3, int teams = 6, int rounds = 6) {
  testkit::LeagueSpec spec;
  spec.n_teams = teams;
  spec.rounds = rounds;
  spec.seed = seed;
  return testkit::make_league(spec);
}

std::vector<PlayerMatchStats> random_history(Rng& rng, std::size_t n) {
  std::vector<PlayerMatchStats> h(n);
  for (std::size_t i = 0; i < n; ++i) {
    h[i].kickoff_order = static_cast<std::int64_t>(i);
    for (double& v : h[i].stats) v = std::floor(rng.uniform(0, 10));
  }
  return h;
}

std::vector<const PlayerMatchStats*> ptrs(const std::vector<PlayerMatchStats>& v) {
  std::vector<const PlayerMatchStats*> out;
  for (const auto& r : v) out.push_back(&r);
  return out;
}

}  // namespace

TEST(Vocabulary, SizeAndReservedTokens) {
  const auto ds = small_league();
  const Vocabulary v = build_vocabulary(ds);
  EXPECT_EQ(v.num_players(), 66u);
  EXPECT_EQ(v.total_size(), 68u);
  EXPECT_EQ(v.mask_index(), 66);
  EXPECT_EQ(v.pad_index(), 67);
  EXPECT_EQ(v.num_teams(), 6u);
  EXPECT_EQ(v.pad_team_index(), 6);
  EXPECT_TRUE(std::is_sorted(v.player_ids().begin(), v.player_ids().end()));
  EXPECT_THROW(v.player_index("nobody"), IntegrityError);
}

TEST(Vocabulary, PositionIndices) {
  EXPECT_EQ(Vocabulary::position_index(1), 0);
  EXPECT_EQ(Vocabulary::position_index(25), 24);
  EXPECT_EQ(Vocabulary::position_index(0), Vocabulary::kUnknownPositionIndex);
  EXPECT_EQ(Vocabulary::kPadPositionIndex, 26);
  EXPECT_THROW(Vocabulary::position_index(26), IntegrityError);
}

TEST(Vocabulary, RoundTrip) {
  const Vocabulary v = build_vocabulary(small_league());
  const Vocabulary back = parse_vocabulary(serialize_vocabulary(v));
  EXPECT_EQ(back, v);
  EXPECT_EQ(back.player_index(v.player_id(5)), 5);
}

TEST(Vocabulary, EmptyDatasetRejected) { EXPECT_THROW(build_vocabulary(ingest::Dataset{}), IntegrityError); }

TEST(Tokenize, LayoutAndPadding) {
  const auto ds = small_league();
  const Vocabulary v = build_vocabulary(ds);
  const auto& sheet = ds.sheets.front();
  const auto rows = rows_of(ds, sheet.match_id);
  const TokenizedMatch tm = tokenize(rows, sheet, v);
  EXPECT_EQ(tm.tokens.size(), kSequenceLength);
  EXPECT_EQ(tm.stats.size(), kSequenceLength * kNumRawStats);
  EXPECT_EQ(tm.n_real, 22u);
  EXPECT_EQ(tm.tokens[0].team, v.team_index(sheet.home_team_id));
  EXPECT_EQ(tm.tokens[21].team, v.team_index(sheet.away_team_id));
  for (std::size_t i = 22; i < kSequenceLength; ++i) {
    EXPECT_TRUE(tm.tokens[i].is_pad);
    EXPECT_EQ(tm.tokens[i].player, v.pad_index());
    EXPECT_EQ(tm.tokens[i].position, Vocabulary::kPadPositionIndex);
    EXPECT_EQ(tm.tokens[i].team, v.pad_team_index());
    for (double x : tm.stat_row(i)) EXPECT_EQ(x, 0.0);
  }
  EXPECT_EQ(tm.stat_row(0)[0], rows[0]->stats[0]);
}

TEST(Tokenize, OversizedSquadIsCapacityError) {
  testkit::LeagueSpec spec;
  spec.n_teams = 2;
  spec.rounds = 1;
  spec.squad_size = 41;
  const auto ds = testkit::make_league(spec);
  const Vocabulary v = build_vocabulary(ds);
  EXPECT_THROW(tokenize(rows_of(ds, ds.sheets[0].match_id), ds.sheets[0], v), CapacityError);
}

TEST(MaskCount, RoundHalfUpWithFloor) {
  EXPECT_EQ(mask_count(1, 0.25), 1u);
  EXPECT_EQ(mask_count(2, 0.25), 1u);
  EXPECT_EQ(mask_count(4, 0.25), 1u);
  EXPECT_EQ(mask_count(6, 0.25), 2u);
  EXPECT_EQ(mask_count(10, 0.25), 3u);
  EXPECT_EQ(mask_count(22, 0.25), 6u);
  EXPECT_EQ(mask_count(64, 0.25), 16u);
  EXPECT_EQ(mask_count(0, 0.25), 0u);
}

TEST(Augment, InvariantsHoldForEverySample) {
  const auto ds = small_league(5, 8, 4);
  const Vocabulary v = build_vocabulary(ds);
  for (const auto& tm : tokenize_dataset(ds, v)) {
    const auto copies = augment_mpp(tm, 10, 0.25, 77);
    ASSERT_EQ(copies.size(), 10u);
    for (const auto& mm : copies) {
      EXPECT_EQ(mm.masked_positions.size(), std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.25 * tm->n_real))));
      EXPECT_TRUE(std::is_sorted(mm.masked_positions.begin(), mm.masked_positions.end()));
      EXPECT_EQ(std::set<int>(mm.masked_positions.begin(), mm.masked_positions.end()).size(), mm.masked_positions.size());
      for (std::size_t j = 0; j < mm.masked_positions.size(); ++j) {
        const Token& t = tm->tokens[static_cast<std::size_t>(mm.masked_positions[j])];
        EXPECT_FALSE(t.is_pad);
        EXPECT_EQ(mm.targets[j], t.player);
      }
      const auto in = mm.input_players(v.mask_index());
      EXPECT_EQ(std::count(in.begin(), in.end(), v.mask_index()), static_cast<long>(mm.masked_positions.size()));
    }
  }
}

TEST(Augment, DeterministicAndOrderIndependent) {
  const auto ds = small_league();
  const Vocabulary v = build_vocabulary(ds);
  const auto matches = tokenize_dataset(ds, v);
  const auto a = augment_mpp(matches[3], 4, 0.25, 9);
  augment_mpp(matches[0], 4, 0.25, 9);
  const auto b = augment_mpp(matches[3], 4, 0.25, 9);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].masked_positions, b[i].masked_positions);
  const auto c = augment_mpp(matches[3], 4, 0.25, 10);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i) any_diff = any_diff || a[i].masked_positions != c[i].masked_positions;
  EXPECT_TRUE(any_diff);
}

TEST(Augment, ParticipantsOnlyEligibility) {
  auto ds = small_league();
  const Vocabulary v = build_vocabulary(ds);
  auto tm = std::make_shared<TokenizedMatch>(tokenize(rows_of(ds, ds.sheets[0].match_id), ds.sheets[0], v));
  for (std::size_t i = 0; i < 10; ++i) tm->tokens[i].participated = false;
  for (const auto& mm : augment_mpp(tm, 20, 0.25, 1, MaskEligibility::ParticipantsOnly)) {
    EXPECT_EQ(mm.masked_positions.size(), 3u);
    for (int p : mm.masked_positions) EXPECT_GE(p, 10);
  }
}

TEST(Augment, RejectsBadRates) {
  const auto ds = small_league();
  const Vocabulary v = build_vocabulary(ds);
  const auto tm = tokenize_dataset(ds, v).front();
  EXPECT_THROW(augment_mpp(tm, 0, 0.25, 1), ConfigError);
  EXPECT_THROW(augment_mpp(tm, 1, 0.0, 1), ConfigError);
  EXPECT_THROW(augment_mpp(tm, 1, 1.5, 1), ConfigError);
}

TEST(NmspFeatures, MatchesDirectOracle) {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(12);
    const auto hist = random_history(rng, n);
    const auto target = static_cast<std::int64_t>(rng.below(n + 1));
    const FeatureVector f = aggregate_nmsp_features(ptrs(hist), target);
    const std::size_t prior = static_cast<std::size_t>(target);
    const std::size_t lo5 = prior > 5 ? prior - 5 : 0;
    for (std::size_t s = 0; s < kNumRawStats; ++s) {
      auto block = [&](std::size_t from, std::size_t to, std::size_t b) {
        const double cnt = static_cast<double>(to - from);
        double sum = 0;
        for (std::size_t i = from; i < to; ++i) sum += hist[i].stats[s];
        const double mean = cnt > 0 ? sum / cnt : 0;
        double var = 0;
        for (std::size_t i = from; i < to; ++i) var += (hist[i].stats[s] - mean) * (hist[i].stats[s] - mean);
        const double sd = cnt > 0 ? std::sqrt(var / cnt) : 0;
        EXPECT_NEAR(f[b * kNumRawStats + s], sum, 1e-12);
        EXPECT_NEAR(f[(b + 1) * kNumRawStats + s], mean, 1e-12);
        EXPECT_NEAR(f[(b + 2) * kNumRawStats + s], sd, 1e-12);
      };
      block(0, prior, 0);
      block(lo5, prior, 3);
    }
  }
}

TEST(NmspFeatures, PrefixCausal) {
  Rng rng(4);
  auto hist = random_history(rng, 10);
  const FeatureVector before = aggregate_nmsp_features(ptrs(hist), 6);
  for (std::size_t i = 6; i < 10; ++i)
    for (double& v : hist[i].stats) v += 100;
  EXPECT_EQ(aggregate_nmsp_features(ptrs(hist), 6), before);
}

TEST(NmspFeatures, LastFiveIgnoresOlderOrder) {
  Rng rng(8);
  auto hist = random_history(rng, 12);
  const FeatureVector a = aggregate_nmsp_features(ptrs(hist), 12);
  std::swap(hist[0].stats, hist[3].stats);
  std::swap(hist[1].stats, hist[6].stats);
  const FeatureVector b = aggregate_nmsp_features(ptrs(hist), 12);
  for (std::size_t i = 3 * kNumRawStats; i < kNmspFeatureWidth; ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(NmspFeatures, NoHistoryGivesZeros) {
  Rng rng(2);
  const auto hist = random_history(rng, 3);
  const FeatureVector f = aggregate_nmsp_features(ptrs(hist), 0);
  for (double x : f) EXPECT_EQ(x, 0.0);
  EXPECT_EQ(f.size(), 234u);
}

TEST(TeamTargets, SingleContributorAndPermutation) {
  ingest::MatchSheet sheet{"m", "2015-01-01", "L", "H", "A", {}};
  std::vector<PlayerMatchStats> rows(4);
  for (std::size_t i = 0; i < 4; ++i) rows[i].team_id = i < 2 ? "H" : "A";
  rows[1].stats[index_of(Stat::GoalkeeperSave)] = 3;
  auto t = team_targets(ptrs(rows), sheet);
  EXPECT_EQ(t[16], 3.0);
  EXPECT_EQ(std::count(t.begin(), t.end(), 0.0), 35);

  Rng rng(5);
  for (auto& r : rows)
    for (double& v : r.stats) v = rng.uniform(0, 5);
  const auto a = team_targets(ptrs(rows), sheet);
  auto p = ptrs(rows);
  std::reverse(p.begin(), p.end());
  const auto b = team_targets(p, sheet);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  rows[0].team_id = "X";
  EXPECT_THROW(team_targets(ptrs(rows), sheet), IntegrityError);
}

TEST(Split, Examples) {
  std::vector<std::int64_t> ten(10);
  for (int i = 0; i < 10; ++i) ten[static_cast<std::size_t>(i)] = 9 - i;
  auto s = split_dataset(ten, 0.8, SplitMode::Random, 1);
  EXPECT_EQ(s.train.size(), 8u);
  EXPECT_EQ(s.validation.size(), 2u);

  std::vector<std::int64_t> big(17920, 0);
  EXPECT_EQ(split_dataset(big, 0.8, SplitMode::Random, 1).train.size(), 14336u);

  Rng rng(3);
  std::vector<std::int64_t> shuffled(50);
  for (auto& x : shuffled) x = static_cast<std::int64_t>(rng.below(20));
  s = split_dataset(shuffled, 0.8, SplitMode::Chronological, 0);
  std::int64_t max_train = -1, min_val = 1 << 30;
  for (auto i : s.train) max_train = std::max(max_train, shuffled[i]);
  for (auto i : s.validation) min_val = std::min(min_val, shuffled[i]);
  EXPECT_LE(max_train, min_val);

  EXPECT_THROW(split_dataset(ten, 1.0, SplitMode::Random, 1), ConfigError);
  EXPECT_THROW(split_dataset(std::span<const std::int64_t>(ten).first(1), 0.5, SplitMode::Random, 1), IntegrityError);
}

TEST(NmspExamples, WidthsAndBaselines) {
  const auto ds = small_league(7, 6, 5);
  const Vocabulary v = build_vocabulary(ds);
  const auto ex = build_nmsp_examples(ds, v);
  ASSERT_FALSE(ex.empty());
  for (const auto& e : ex) {
    EXPECT_EQ(e.tokens.stat_width, kNmspFeatureWidth);
    EXPECT_EQ(e.tokens.stats.size(), kSequenceLength * kNmspFeatureWidth);
    EXPECT_TRUE(e.baseline.has_value());
  }
  // first round has no team history
  EXPECT_EQ(ex.size(), ds.sheets.size() - 3);
  NmspBuildOptions all;
  all.require_team_history = false;
  EXPECT_EQ(build_nmsp_examples(ds, v, all).size(), ds.sheets.size());
}

TEST(CorpusIo, MppRoundTrip) {
  const auto ds = small_league();
  const Vocabulary v = build_vocabulary(ds);
  MppCorpusOptions o;
  o.augment = 3;
  o.seed = 5;
  const MppCorpus c = build_mpp_corpus(ds, v, o);
  EXPECT_EQ(c.train.size() + c.validation.size(), ds.sheets.size() * 3);
  const std::string text = serialize_mpp_corpus(c);
  const MppCorpus back = parse_mpp_corpus(text);
  ASSERT_EQ(back.train.size(), c.train.size());
  for (std::size_t i = 0; i < c.train.size(); ++i) {
    EXPECT_EQ(*back.train[i].base, *c.train[i].base);
    EXPECT_EQ(back.train[i].masked_positions, c.train[i].masked_positions);
    EXPECT_EQ(back.train[i].targets, c.train[i].targets);
  }
  EXPECT_EQ(serialize_mpp_corpus(back), text);
}

TEST(CorpusIo, NmspRoundTrip) {
  const auto ds = small_league();
  const Vocabulary v = build_vocabulary(ds);
  const NmspCorpus c = build_nmsp_corpus(ds, v, {});
  const NmspCorpus back = parse_nmsp_corpus(serialize_nmsp_corpus(c));
  ASSERT_EQ(back.validation.size(), c.validation.size());
  for (std::size_t i = 0; i < c.validation.size(); ++i) {
    EXPECT_EQ(back.validation[i].tokens, c.validation[i].tokens);
    EXPECT_EQ(back.validation[i].target, c.validation[i].target);
    EXPECT_EQ(back.validation[i].baseline, c.validation[i].baseline);
  }
}

TEST(CorpusIo, CorruptionDetected) {
  const auto ds = small_league();
  const Vocabulary v = build_vocabulary(ds);
  MppCorpusOptions o;
  o.augment = 1;
  const std::string text = serialize_mpp_corpus(build_mpp_corpus(ds, v, o));
  EXPECT_THROW(parse_mpp_corpus(text.substr(0, text.size() / 2)), IntegrityError);
  EXPECT_THROW(parse_nmsp_corpus(text), IntegrityError);
  std::string bad = text;
  bad.replace(bad.find("\"version\":1"), 11, "\"version\":9");
  EXPECT_THROW(parse_mpp_corpus(bad), Error);
}

TEST(CorpusIo, NmspStatWidthValidated) {
  NmspExample e;
  e.tokens.stat_width = 39;
  EXPECT_THROW(validate_nmsp_examples(std::span<const NmspExample>(&e, 1)), IntegrityError);
}
