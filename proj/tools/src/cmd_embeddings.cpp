#include <cstdio>
#include <iostream>

#include "commands.hpp"
#include "rb/analytics/analytics.hpp"
#include "rb/common/digest.hpp"
#include "rb/common/error.hpp"
#include "rb/features/features.hpp"
#include "rb/ingest/dataset_io.hpp"
#include "rb/model/model.hpp"
#include "run_manifest.hpp"

namespace fs = std::filesystem;

namespace rb::cli {

namespace {

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

template <class T>
analytics::EmbeddingMatrix table_rows(const num::Tensor<T>& table, std::vector<std::string> ids,
                                      std::vector<std::int64_t> counts, const std::string& source) {
  const std::size_t dim = table.shape()[1];
  std::vector<double> values(ids.size() * dim);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<double>(table[i]);
  return analytics::EmbeddingMatrix(std::move(ids), std::move(values), dim, std::move(counts), source);
}

struct Tables {
  analytics::EmbeddingMatrix players, positions;
  features::Vocabulary vocab;
  ingest::Dataset dataset;
};

template <class T>
Tables load_tables(const EmbeddingArgs& a, const path& ck, bool need_players) {
  const model::ModelParams<T> params = model::load_checkpoint<T>(ck);
  const std::string source = model::read_checkpoint_manifest(ck).at("params_sha256").get<std::string>();
  Tables t;
  std::vector<std::string> codes;
  for (std::size_t i = 0; i < kNumPositions; ++i)
    codes.push_back(std::to_string(features::Vocabulary::position_code(static_cast<int>(i))));
  t.positions = table_rows(params.position_table.value, codes, {}, source);
  if (need_players) {
    t.vocab = features::load_vocabulary(a.vocab);
    if (params.config.vocab_size != static_cast<int>(t.vocab.total_size()))
      throw IntegrityError("vocabulary " + a.vocab.string() + " does not match the checkpoint's player table");
    t.dataset = ingest::import_dataset(a.dataset);
    const auto& ids = t.vocab.player_ids();
    t.players = table_rows(params.player_table.value, ids, analytics::participation_counts(t.dataset.rows, ids),
                           source);
  }
  return t;
}

std::string ranking(const analytics::Ranking& r, const std::string& label, std::size_t k) {
  std::string out = "rank\t" + label + "\tscore\n";
  for (std::size_t i = 0; i < r.size() && (k == 0 || i < k); ++i)
    out += std::to_string(i + 1) + '\t' + r[i].first + '\t' + num(r[i].second) + '\n';
  return out;
}

std::vector<std::string> squad_of(const Tables& t, const std::string& team, std::size_t n) {
  t.vocab.team_index(team);
  return analytics::most_frequent_players(t.dataset.rows, team, n);
}

}  // namespace

int cmd_embeddings(const EmbeddingArgs& a) {
  const path ck = checkpoint_dir(a.checkpoint);
  const bool need_players = a.action != "cluster";
  const Tables t = model::checkpoint_precision(ck) == "float64" ? load_tables<double>(a, ck, need_players)
                                                                 : load_tables<float>(a, ck, need_players);
  std::string out;
  if (a.action == "similar") {
    out = ranking(analytics::top_k_similar(a.player, t.players, a.k, a.min_matches), "player", 0);
  } else if (a.action == "position-rank") {
    out = ranking(analytics::rank_players_for_position(a.position, t.players, t.positions, a.min_matches), "player",
                  a.k);
  } else if (a.action == "cluster") {
    const auto c = analytics::cluster_positions(t.positions, a.k, a.seed, a.restarts);
    out = "position\tcluster\n";
    for (std::size_t i = 0; i < c.assignment.size(); ++i)
      out += t.positions.ids()[i] + '\t' + std::to_string(c.assignment[i]) + '\n';
    std::cerr << "k=" << a.k << " within-cluster sum of squares " << num(c.wcss) << '\n';
  } else if (a.action == "cohesion") {
    std::vector<std::string> teams = a.teams.empty() ? t.vocab.team_ids() : a.teams;
    out = "team\tplayers\tcohesion\tpair_normalized\n";
    for (const auto& team : teams) {
      const auto squad = squad_of(t, team, a.squad);
      const auto c = analytics::team_cohesion(squad, t.players);
      out += team + '\t' + std::to_string(squad.size()) + '\t' + num(c.cohesion) + '\t' + num(c.pair_normalized) + '\n';
    }
  } else if (a.action == "heatmap") {
    if (a.teams.size() != 2) throw ConfigError("heatmap needs exactly two teams");
    std::vector<std::string> ids = squad_of(t, a.teams[0], a.squad);
    const auto second = squad_of(t, a.teams[1], a.squad);
    ids.insert(ids.end(), second.begin(), second.end());
    const auto d = analytics::dissimilarity_matrix(ids, t.players);
    out = "player";
    for (const auto& id : ids) out += '\t' + id;
    out += '\n';
    for (std::size_t i = 0; i < ids.size(); ++i) {
      out += ids[i];
      for (std::size_t j = 0; j < ids.size(); ++j) out += '\t' + num(d[i * ids.size() + j]);
      out += '\n';
    }
  } else if (a.action == "export") {
    if (a.table == "players")
      out = analytics::serialize_embeddings(t.players, a.min_matches);
    else if (a.table == "positions")
      out = analytics::serialize_embeddings(t.positions, 0);
    else
      throw ConfigError("--table: expected players or positions, got " + a.table);
  } else {
    throw ConfigError("unknown embeddings action " + a.action);
  }

  if (a.out.empty()) {
    std::cout << out;
    return 0;
  }
  ensure_parent(a.out);
  write_file(a.out, out);
  RunRecord rec;
  rec.command = "embeddings " + a.action;
  rec.config = {{"min_matches", a.min_matches}, {"k", a.k}, {"squad", a.squad}};
  if (!a.player.empty()) rec.config["player"] = a.player;
  if (!a.position.empty()) rec.config["position"] = a.position;
  if (!a.teams.empty()) rec.config["teams"] = a.teams;
  if (a.action == "export") rec.config["table"] = a.table;
  rec.seed = a.seed;
  rec.inputs = {ck};
  if (need_players) {
    rec.inputs.push_back(a.vocab);
    rec.inputs.push_back(a.dataset);
  }
  const path abs = fs::absolute(a.out);
  rec.artifacts = {abs};
  record_run(abs.parent_path(), rec);
  return 0;
}

}  // namespace rb::cli
