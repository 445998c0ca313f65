// Writes a synthetic league dataset for the command-line pipeline test.
#include <cstdlib>
#include <iostream>

#include "rb/ingest/dataset_io.hpp"
#include "synth.hpp"

int main(int argc, char** argv) {
  if (argc != 6) {
    std::cerr << "usage: rb_make_league OUT TEAMS SQUAD ROUNDS SEED\n";
    return 1;
  }
  rb::testkit::LeagueSpec spec;
  spec.n_teams = std::atoi(argv[2]);
  spec.squad_size = std::atoi(argv[3]);
  spec.rounds = std::atoi(argv[4]);
  spec.seed = std::strtoull(argv[5], nullptr, 10);
  const rb::ingest::Dataset ds = rb::testkit::make_league(spec);
  rb::ingest::export_dataset(ds.rows, ds.sheets, argv[1]);
  std::cout << ds.sheets.size() << " matches\n";
  return 0;
}
