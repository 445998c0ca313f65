#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "rb/common/rng.hpp"
#include "rb/model/model.hpp"
#include "rb/numcore/graph.hpp"

using namespace rb;

namespace {

template <class T>
num::Tensor<T> random_tensor(Rng& rng, std::size_t r, std::size_t c) {
  num::Tensor<T> t(r, c);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.normal());
  return t;
}

// One match of 36 real tokens padded to the full sequence.
features::TokenizedMatch sample_match(Rng& rng, int n_players, int n_teams) {
  features::TokenizedMatch tm;
  tm.match_id = "bench";
  tm.n_real = 36;
  tm.home_team = 0;
  tm.away_team = 1;
  tm.tokens.resize(kSequenceLength);
  tm.stats.assign(kSequenceLength * kNumRawStats, 0.0);
  for (std::size_t i = 0; i < kSequenceLength; ++i) {
    auto& t = tm.tokens[i];
    if (i < tm.n_real) {
      t = {static_cast<int>(rng.below(static_cast<std::uint64_t>(n_players))), static_cast<int>(i % kNumPositions),
           static_cast<int>(i % 2), false, true};
      for (std::size_t s = 0; s < kNumRawStats; ++s) tm.stats[i * kNumRawStats + s] = std::abs(rng.normal());
    } else {
      t = {n_players + 1, features::Vocabulary::kPadPositionIndex, n_teams, true, false};
    }
  }
  return tm;
}

template <class T>
void BM_Gemm(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0)), k = static_cast<std::size_t>(state.range(1)),
             n = static_cast<std::size_t>(state.range(2));
  Rng rng(1);
  const auto a = random_tensor<T>(rng, m, k), b = random_tensor<T>(rng, k, n);
  std::vector<T> c(m * n);
  for (auto _ : state) {
    num::gemm_nn(a.data(), b.data(), c.data(), m, k, n, false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * 2 * m * k * n));
}
BENCHMARK(BM_Gemm<float>)->Args({80, 64, 64})->Args({80, 64, 256})->Args({80, 64, 2602});
BENCHMARK(BM_Gemm<double>)->Args({80, 64, 64})->Args({80, 64, 2602});

// Scaled dot-product attention over the full sequence with half the keys masked.
template <class T>
void BM_Attention(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const bool backward = state.range(1) != 0;
  Rng rng(2);
  num::Parameter<T> q("q", random_tensor<T>(rng, kSequenceLength, d)), k("k", random_tensor<T>(rng, kSequenceLength, d)),
      v("v", random_tensor<T>(rng, kSequenceLength, d));
  std::vector<std::uint8_t> mask(kSequenceLength, 0);
  for (std::size_t i = 0; i < kSequenceLength / 2; ++i) mask[i] = 1;
  const T inv = static_cast<T>(1.0 / std::sqrt(static_cast<double>(d)));
  for (auto _ : state) {
    num::Graph<T> g;
    auto scores = num::scale(num::matmul_nt(g.parameter(q), g.parameter(k)), inv);
    auto out = num::matmul(num::softmax_rows(scores, std::span<const std::uint8_t>(mask)), g.parameter(v));
    if (backward) g.backward(num::sum(out));
    benchmark::DoNotOptimize(out.value().data());
  }
}
BENCHMARK(BM_Attention<float>)->Args({64, 0})->Args({64, 1})->Args({128, 0})->Args({128, 1});

// Forward and backward pass of the masked-player objective on one sample.
void BM_MppSample(benchmark::State& state) {
  const int layers = static_cast<int>(state.range(0)), dim = static_cast<int>(state.range(1));
  const int n_players = 2600, n_teams = 98;
  auto params = model::init_model<float>(model::make_config(layers, dim, n_players + 2, n_teams + 1), 3);
  Rng rng(4);
  const auto tm = sample_match(rng, n_players, n_teams);
  std::vector<int> players;
  for (const auto& t : tm.tokens) players.push_back(t.player);
  std::vector<int> rows, targets;
  for (int i = 0; i < 9; ++i) {
    rows.push_back(i * 4);
    targets.push_back(players[static_cast<std::size_t>(i * 4)]);
    players[static_cast<std::size_t>(i * 4)] = n_players;
  }
  const std::vector<std::uint8_t> active(rows.size(), 1);
  const auto keys = model::key_mask(tm);
  for (auto _ : state) {
    params.zero_grad();
    num::Graph<float> g;
    const auto b = model::bind(g, params);
    auto x = model::embed_inputs(g, b, {&tm, players, 0});
    auto logits = model::mpp_logits(g, b, model::encode(g, b, x, keys), rows);
    auto loss = num::cross_entropy(logits, std::span<const int>(targets), std::span<const std::uint8_t>(active));
    g.backward(loss);
    benchmark::DoNotOptimize(loss.value().data());
  }
}
BENCHMARK(BM_MppSample)->Args({1, 64})->Args({2, 128})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
