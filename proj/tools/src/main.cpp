#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "commands.hpp"
#include "rb/common/error.hpp"

#ifndef RB_TOOL_VERSION
#define RB_TOOL_VERSION "unknown"
#endif

using namespace rb::cli;

int main(int argc, char** argv) {
  CLI::App app{"Player and team representations from match lineups and statistics"};
  app.set_version_flag("--version", std::string(RB_TOOL_VERSION));
  app.require_subcommand(1);
  int status = 0;

  IngestArgs ia;
  auto* ingest = app.add_subcommand("ingest", "Convert event and lineup files into a player-match dataset");
  ingest->add_option("--events", ia.events, "Directory of per-match event files")->required();
  ingest->add_option("--lineups", ia.lineups, "Directory of per-match lineup files")->required();
  ingest->add_option("--metadata", ia.metadata, "Optional directory of match metadata files");
  ingest->add_option("--adapter", ia.adapter, "Source format")->capture_default_str();
  ingest->add_option("--out", ia.out, "Dataset file to write")->required();
  ingest->callback([&] { status = cmd_ingest(ia); });

  FeaturesArgs fa;
  auto* feat = app.add_subcommand("features", "Build a tokenized training corpus");
  feat->add_option("--dataset", fa.dataset, "Dataset file from ingest")->required();
  feat->add_option("--task", fa.task, "mpp or nmsp")->capture_default_str();
  feat->add_option("--mask-rate", fa.mask_rate, "Share of tokens masked per sample")->capture_default_str();
  feat->add_option("--augment", fa.augment, "Masked samples per match")->capture_default_str();
  feat->add_option("--seq-len", fa.seq_len, "Tokens per match")->capture_default_str();
  feat->add_option("--split", fa.split, "Training share")->capture_default_str();
  feat->add_option("--split-mode", fa.split_mode, "random or chronological");
  feat->add_flag("--participants-only", fa.participants_only, "Mask only players who took part");
  feat->add_option("--seed", fa.seed, "Seed for splits and masks")->capture_default_str();
  feat->add_option("--out", fa.out, "Output directory")->required();
  feat->callback([&] { status = cmd_features(fa); });

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "Pretrain (mpp) or fine-tune (nmsp) a model");
  tr->add_option("--corpus", ta.corpus, "Corpus directory from features")->required();
  tr->add_option("--out", ta.out, "Run directory")->required();
  tr->add_option("--task", ta.task, "mpp or nmsp; overrides the config file");
  tr->add_option("--config", ta.config, "key = value config file");
  tr->add_option("--set", ta.overrides, "key=value override, repeatable");
  tr->add_option("--from-checkpoint", ta.from_checkpoint, "Initialize from a saved model");
  tr->add_flag("--no-team-embeddings", ta.no_team_embeddings, "Drop the team embedding term");
  tr->add_option("--sweep", ta.sweep, "File of override lines, one run per line");
  tr->callback([&] { status = cmd_train(ta); });

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a corpus");
  ev->add_option("--checkpoint", ea.checkpoint, "Checkpoint or run directory")->required();
  ev->add_option("--corpus", ea.corpus, "Corpus directory")->required();
  ev->add_flag("--baseline", ea.baseline, "Compare against the last-five-matches baseline");
  ev->add_option("--out", ea.out, "Directory for the report files");
  ev->callback([&] { status = cmd_eval(ea); });

  EmbeddingArgs ma;
  auto* emb = app.add_subcommand("embeddings", "Query learned player and position embeddings");
  emb->require_subcommand(1);
  auto common = [&](CLI::App* s, bool players) {
    s->add_option("--checkpoint", ma.checkpoint, "Checkpoint or run directory")->required();
    if (players) {
      s->add_option("--vocab", ma.vocab, "Vocabulary file")->required();
      s->add_option("--dataset", ma.dataset, "Dataset file, for match counts")->required();
      s->add_option("--min-matches", ma.min_matches, "Minimum matches played")->capture_default_str();
    }
    s->add_option("--out", ma.out, "Output file");
  };
  auto* sim = emb->add_subcommand("similar", "Most similar players");
  common(sim, true);
  sim->add_option("--player", ma.player, "Query player id")->required();
  sim->add_option("--k", ma.k, "Number of results")->capture_default_str();
  auto* pr = emb->add_subcommand("position-rank", "Players ranked against a position embedding");
  common(pr, true);
  pr->add_option("--position", ma.position, "Position code 1..25")->required();
  pr->add_option("--k", ma.k, "Rows to print, 0 for all")->capture_default_str();
  auto* cl = emb->add_subcommand("cluster", "k-means over position embeddings");
  common(cl, false);
  cl->add_option("--k", ma.k, "Number of clusters")->required();
  cl->add_option("--seed", ma.seed, "Seed")->capture_default_str();
  cl->add_option("--restarts", ma.restarts, "k-means++ restarts")->capture_default_str();
  auto* co = emb->add_subcommand("cohesion", "Team cohesion over the most frequent players");
  common(co, true);
  co->add_option("--team", ma.teams, "Team id, repeatable; all teams when omitted");
  co->add_option("--squad", ma.squad, "Players per team")->capture_default_str();
  auto* hm = emb->add_subcommand("heatmap", "Cosine dissimilarity between two squads");
  common(hm, true);
  hm->add_option("--teams", ma.teams, "Two team ids")->required()->expected(2);
  hm->add_option("--squad", ma.squad, "Players per team")->capture_default_str();
  auto* ex = emb->add_subcommand("export", "Write an embedding table");
  common(ex, true);
  ex->add_option("--table", ma.table, "players or positions")->capture_default_str();
  for (auto* s : {sim, pr, cl, co, hm, ex})
    s->callback([&ma, &status, s] {
      ma.action = s->get_name();
      status = cmd_embeddings(ma);
    });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(rb::ErrorKind::Usage);
  } catch (const rb::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(rb::ErrorKind::DataIntegrity);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(rb::ErrorKind::DataIntegrity);
  }
  return status;
}
