#include <iostream>
#include <set>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "rb/common/digest.hpp"
#include "rb/common/error.hpp"
#include "rb/features/corpus_io.hpp"
#include "rb/ingest/dataset_io.hpp"
#include "rb/ingest/ingest.hpp"
#include "rb/train/train.hpp"
#include "run_manifest.hpp"

namespace fs = std::filesystem;

namespace rb::cli {

path checkpoint_dir(const path& p) {
  if (fs::is_directory(p / "checkpoint")) return p / "checkpoint";
  return p;
}

void ensure_parent(const path& file) {
  const path parent = file.parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

namespace {

path run_dir_of(const path& file) { return file.parent_path().empty() ? path(".") : file.parent_path(); }

template <class Samples>
nlohmann::ordered_json side_summary(const Samples& samples) {
  std::set<std::string> ids;
  for (const auto& s : samples) {
    if constexpr (requires { s.base; })
      ids.insert(s.base->match_id);
    else
      ids.insert(s.tokens.match_id);
  }
  nlohmann::ordered_json j;
  j["samples"] = samples.size();
  j["matches"] = std::vector<std::string>(ids.begin(), ids.end());
  return j;
}

}  // namespace

int cmd_ingest(const IngestArgs& a) {
  ingest::IngestSummary summary;
  const ingest::Dataset ds = ingest::ingest_directory(a.events, a.lineups, a.adapter, a.metadata, &summary);
  ensure_parent(a.out);
  ingest::export_dataset(ds.rows, ds.sheets, a.out);
  std::cout << summary.matches << " matches, " << summary.players << " players, " << summary.teams << " teams\n"
            << summary.events << " events kept, " << summary.dropped_events << " dropped\n";

  RunRecord rec;
  rec.command = "ingest";
  rec.config = {{"adapter", a.adapter}};
  rec.inputs = {a.events, a.lineups};
  if (!a.metadata.empty()) rec.inputs.push_back(a.metadata);
  rec.artifacts = {fs::absolute(a.out)};
  record_run(fs::absolute(run_dir_of(a.out)), rec);
  return 0;
}

int cmd_features(const FeaturesArgs& a) {
  if (a.seq_len != static_cast<int>(kSequenceLength))
    throw ConfigError("--seq-len: sequences are fixed at " + std::to_string(kSequenceLength) + " tokens");
  if (!(a.split > 0.0 && a.split < 1.0)) throw ConfigError("--split must lie in (0, 1)");
  const train::Task task_kind = train::task_from_string(a.task);
  std::string mode = a.split_mode;
  if (mode.empty()) mode = task_kind == train::Task::Mpp ? "random" : "chronological";
  if (mode != "random" && mode != "chronological")
    throw ConfigError("--split-mode: expected random or chronological, got " + mode);
  const features::SplitMode split_mode =
      mode == "random" ? features::SplitMode::Random : features::SplitMode::Chronological;

  const ingest::Dataset ds = ingest::import_dataset(a.dataset);
  const features::Vocabulary vocab = features::build_vocabulary(ds);
  fs::create_directories(a.out);
  const path corpus_file = a.out / "corpus.jsonl", vocab_file = a.out / "vocabulary.json",
             split_file = a.out / "split.json";

  nlohmann::ordered_json split;
  split["task"] = a.task;
  split["ratio"] = a.split;
  split["mode"] = mode;
  split["seed"] = a.seed;
  nlohmann::ordered_json cfg;
  cfg["task"] = a.task;
  if (task_kind == train::Task::Mpp) {
    if (!(a.mask_rate > 0.0 && a.mask_rate <= 1.0)) throw ConfigError("--mask-rate must lie in (0, 1]");
    if (a.augment < 1) throw ConfigError("--augment must be at least 1");
    features::MppCorpusOptions o;
    o.augment = a.augment;
    o.mask_rate = a.mask_rate;
    o.eligibility = a.participants_only ? features::MaskEligibility::ParticipantsOnly
                                        : features::MaskEligibility::AnyRealToken;
    o.split_ratio = a.split;
    o.split_mode = split_mode;
    o.seed = a.seed;
    const features::MppCorpus corpus = features::build_mpp_corpus(ds, vocab, o);
    features::write_mpp_corpus(corpus_file, corpus);
    split["train"] = side_summary(corpus.train);
    split["validation"] = side_summary(corpus.validation);
    cfg["mask_rate"] = a.mask_rate;
    cfg["augment"] = a.augment;
    cfg["participants_only"] = a.participants_only;
    std::cout << corpus.matches.size() << " matches, " << corpus.train.size() << " training and "
              << corpus.validation.size() << " validation samples, vocabulary " << vocab.total_size() << '\n';
  } else {
    features::NmspCorpusOptions o;
    o.split_ratio = a.split;
    o.split_mode = split_mode;
    o.seed = a.seed;
    const features::NmspCorpus corpus = features::build_nmsp_corpus(ds, vocab, o);
    if (corpus.train.empty() || corpus.validation.empty())
      throw IntegrityError("nmsp corpus: too few matches with team history for a train/validation split");
    features::write_nmsp_corpus(corpus_file, corpus);
    split["train"] = side_summary(corpus.train);
    split["validation"] = side_summary(corpus.validation);
    std::cout << corpus.train.size() << " training and " << corpus.validation.size()
              << " validation examples, feature width " << kNmspFeatureWidth << '\n';
  }
  features::save_vocabulary(vocab, vocab_file);
  write_file(split_file, split.dump(2) + "\n");

  cfg["seq_len"] = a.seq_len;
  cfg["split"] = a.split;
  cfg["split_mode"] = mode;
  RunRecord rec;
  rec.command = "features";
  rec.config = cfg;
  rec.seed = a.seed;
  rec.inputs = {a.dataset};
  rec.artifacts = {corpus_file, vocab_file, split_file};
  record_run(a.out, rec);
  return 0;
}

}  // namespace rb::cli
