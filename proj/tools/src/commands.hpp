#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace rb::cli {

using std::filesystem::path;

struct IngestArgs {
  path events, lineups, metadata, out;
  std::string adapter = "native";
};
int cmd_ingest(const IngestArgs& a);

struct FeaturesArgs {
  path dataset, out;
  std::string task = "mpp";
  double mask_rate = 0.25;
  int augment = 10;
  int seq_len = 80;
  double split = 0.8;
  std::string split_mode;  // empty: random for mpp, chronological for nmsp
  bool participants_only = false;
  std::uint64_t seed = 0;
};
int cmd_features(const FeaturesArgs& a);

struct TrainArgs {
  path corpus, out, config, from_checkpoint, sweep;
  std::string task;
  std::vector<std::string> overrides;
  bool no_team_embeddings = false;
};
int cmd_train(const TrainArgs& a);

struct EvalArgs {
  path checkpoint, corpus, out;
  bool baseline = false;
};
int cmd_eval(const EvalArgs& a);

struct EmbeddingArgs {
  std::string action;
  path checkpoint, vocab, dataset, out;
  std::int64_t min_matches = 10;
  std::string player, position, table = "players";
  std::vector<std::string> teams;
  std::size_t k = 10;
  std::size_t squad = 14;
  std::uint64_t seed = 0;
  int restarts = 20;
};
int cmd_embeddings(const EmbeddingArgs& a);

// A run directory holding checkpoint/ resolves to that subdirectory.
path checkpoint_dir(const path& p);
// Creates the parent directory of a file about to be written.
void ensure_parent(const path& file);

}  // namespace rb::cli
