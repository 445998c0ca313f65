#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "rb/analytics/analytics.hpp"
#include "rb/common/digest.hpp"
#include "rb/common/error.hpp"
#include "rb/features/corpus_io.hpp"
#include "rb/train/train.hpp"
#include "run_manifest.hpp"

namespace fs = std::filesystem;

namespace rb::cli {

namespace {

struct CorpusDir {
  path corpus_file, vocab_file;
  std::string task;
  features::Vocabulary vocab;
};

CorpusDir open_corpus(const path& dir) {
  CorpusDir c;
  c.corpus_file = dir / "corpus.jsonl";
  c.vocab_file = dir / "vocabulary.json";
  if (!fs::is_regular_file(c.corpus_file)) throw IoError("no corpus.jsonl in " + dir.string());
  if (!fs::is_regular_file(c.vocab_file)) throw IoError("no vocabulary.json in " + dir.string());
  c.task = features::corpus_task(c.corpus_file);
  c.vocab = features::load_vocabulary(c.vocab_file);
  return c;
}

void check_vocab(const model::ModelConfig& m, const features::Vocabulary& v) {
  if (m.vocab_size != static_cast<int>(v.total_size()) || m.n_teams != static_cast<int>(v.team_table_size()))
    throw IntegrityError("checkpoint vocabulary (" + std::to_string(m.vocab_size) + " tokens, " +
                         std::to_string(m.n_teams) + " team rows) does not match the corpus vocabulary (" +
                         std::to_string(v.total_size()) + ", " + std::to_string(v.team_table_size()) + ")");
}

std::string fixed(double x, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

nlohmann::ordered_json record_json(const train::EvalRecord& r) {
  nlohmann::ordered_json j;
  j["step"] = r.step;
  j["epoch"] = r.epoch;
  j["train_loss"] = r.train_loss;
  j["val_loss"] = r.val_loss;
  if (r.val_top1) j["val_top1"] = *r.val_top1;
  if (r.val_top3) j["val_top3"] = *r.val_top3;
  if (r.val_global_mse) j["val_global_mse"] = *r.val_global_mse;
  return j;
}

template <class T>
train::RunReport run_training(const CorpusDir& cd, const train::TrainConfig& c, const path& from) {
  std::optional<model::ModelParams<T>> init;
  if (!from.empty()) init = model::load_checkpoint<T>(checkpoint_dir(from));
  if (c.task == train::Task::Mpp) {
    const features::MppCorpus corpus = features::read_mpp_corpus(cd.corpus_file);
    return train::pretrain_mpp<T>(corpus.train, corpus.validation, c, init ? &*init : nullptr).report;
  }
  const features::NmspCorpus corpus = features::read_nmsp_corpus(cd.corpus_file);
  return train::finetune_nmsp<T>(corpus.train, corpus.validation, c, init ? &*init : nullptr).report;
}

int run_sweep_file(const TrainArgs& a, const CorpusDir& cd, const Settings& base) {
  if (cd.task != "mpp") throw ConfigError("--sweep runs mpp pretraining; the corpus holds " + cd.task);
  if (!a.from_checkpoint.empty()) throw ConfigError("--sweep cannot start from a checkpoint");
  std::istringstream in(read_file(a.sweep));
  std::vector<train::TrainConfig> grid;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::array();
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Settings s = base;
    for (const auto& [k, v] : parse_override_line(line, a.sweep.string() + ":" + std::to_string(n))) s[k] = v;
    const Resolved r = resolve(s, cd.vocab, nullptr);
    if (r.precision != "float32") throw ConfigError("--sweep trains in float32 only");
    grid.push_back(r.train);
    cfg.push_back(r.snapshot);
  }
  if (grid.empty()) throw ConfigError("sweep file " + a.sweep.string() + " lists no configurations");
  const features::MppCorpus corpus = features::read_mpp_corpus(cd.corpus_file);
  const train::SweepResult res = train::run_sweep(grid, corpus);
  fs::create_directories(a.out);
  const std::string table = train::sweep_table(res);
  write_file(a.out / "sweep.tsv", table);
  std::cout << table;

  RunRecord rec;
  rec.command = "train";
  rec.config = {{"sweep", cfg}};
  rec.seed = grid.front().seed;
  rec.inputs = {cd.corpus_file, cd.vocab_file, a.sweep};
  rec.artifacts = {a.out / "sweep.tsv"};
  record_run(a.out, rec);
  return 0;
}

}  // namespace

int cmd_train(const TrainArgs& a) {
  const CorpusDir cd = open_corpus(a.corpus);
  Settings given;
  if (!a.config.empty()) given = read_settings(a.config);
  if (!a.task.empty()) given["task"] = a.task;
  for (const auto& o : a.overrides) apply_override(given, o);
  if (a.no_team_embeddings) given["team_embeddings"] = "false";
  if (!given.contains("task")) given["task"] = cd.task;
  if (given["task"] != cd.task)
    throw ConfigError("task " + given["task"] + " does not match the " + cd.task + " corpus in " + a.corpus.string());

  if (!a.sweep.empty()) return run_sweep_file(a, cd, given);

  std::optional<model::ModelConfig> base;
  if (!a.from_checkpoint.empty()) {
    const path ck = checkpoint_dir(a.from_checkpoint);
    const nlohmann::json m = model::read_checkpoint_manifest(ck);
    base = model::config_from_json(m.at("config"));
    check_vocab(*base, cd.vocab);
    const std::string prec = model::checkpoint_precision(ck);
    if (!given.contains("precision")) given["precision"] = prec;
    if (given["precision"] != prec)
      throw ConfigError("precision " + given["precision"] + " differs from the checkpoint's " + prec);
  }
  Resolved r = resolve(given, cd.vocab, base ? &*base : nullptr);
  r.train.output_dir = a.out;
  fs::create_directories(a.out);

  const train::RunReport report = r.precision == "float64" ? run_training<double>(cd, r.train, a.from_checkpoint)
                                                            : run_training<float>(cd, r.train, a.from_checkpoint);

  const path config_file = a.out / "config.txt", report_file = a.out / "report.json",
             vocab_copy = a.out / "vocabulary.json";
  write_file(config_file, render_settings(r.snapshot));
  if (fs::absolute(cd.vocab_file) != fs::absolute(vocab_copy))
    fs::copy_file(cd.vocab_file, vocab_copy, fs::copy_options::overwrite_existing);
  nlohmann::ordered_json rep;
  rep["task"] = train::to_string(report.task);
  rep["model"] = train::config_label(r.train);
  rep["parameter_count"] = report.parameter_count;
  rep["steps"] = report.steps;
  rep["epochs"] = report.epochs;
  rep["steps_per_epoch"] = report.steps_per_epoch;
  rep["final"] = record_json(report.final_record());
  write_file(report_file, rep.dump(2) + "\n");

  const auto& f = report.final_record();
  std::cout << train::config_label(r.train) << ": " << report.parameter_count << " parameters, " << report.steps
            << " steps, " << fixed(report.wall_seconds, 1) << " s\n"
            << "train loss " << fixed(f.train_loss, 4) << ", validation loss " << fixed(f.val_loss, 4);
  if (f.val_top1) std::cout << ", top-1 " << fixed(*f.val_top1, 4) << ", top-3 " << fixed(*f.val_top3, 4);
  std::cout << '\n';

  RunRecord rec;
  rec.command = "train";
  for (const auto& [k, v] : r.snapshot) rec.config[k] = v;
  rec.seed = r.train.seed;
  rec.inputs = {cd.corpus_file, cd.vocab_file};
  if (!a.config.empty()) rec.inputs.push_back(a.config);
  if (!a.from_checkpoint.empty()) rec.inputs.push_back(checkpoint_dir(a.from_checkpoint));
  rec.artifacts = {report.checkpoint_path, a.out / "metrics.jsonl", report_file, config_file, vocab_copy};
  record_run(a.out, rec);
  return 0;
}

namespace {

std::string cell(const analytics::StatMetric& m) {
  return fixed(m.rmse) + "|" + (m.delta ? fixed(*m.delta) : std::string("n/a"));
}

template <class T>
int eval_checkpoint(const EvalArgs& a, const path& ck, const CorpusDir& cd) {
  const model::ModelParams<T> params = model::load_checkpoint<T>(ck);
  const bool mpp_head = params.config.head == model::HeadKind::Mpp;
  if (mpp_head != (cd.task == "mpp"))
    throw ConfigError(std::string("checkpoint has an ") + (mpp_head ? "mpp" : "nmsp") + " head but the corpus is " +
                      cd.task);
  check_vocab(params.config, cd.vocab);

  nlohmann::ordered_json summary;
  summary["task"] = cd.task;
  std::string table;
  if (mpp_head) {
    if (a.baseline) throw ConfigError("--baseline applies to nmsp checkpoints");
    const features::MppCorpus corpus = features::read_mpp_corpus(cd.corpus_file);
    const train::MppMetrics m =
        train::evaluate_mpp(params, std::span<const features::MaskedMatch>(corpus.validation));
    summary["positions"] = m.positions;
    summary["cross_entropy"] = m.cross_entropy;
    summary["top1"] = m.top1;
    summary["top3"] = m.top3;
    std::cout << m.positions << " masked positions: cross-entropy " << fixed(m.cross_entropy, 4) << ", top-1 "
              << fixed(m.top1, 4) << ", top-3 " << fixed(m.top3, 4) << '\n';
  } else {
    const features::NmspCorpus corpus = features::read_nmsp_corpus(cd.corpus_file);
    std::vector<features::NmspExample> examples;
    for (const auto& e : corpus.validation)
      if (!a.baseline || e.baseline) examples.push_back(e);
    if (examples.empty()) throw IntegrityError("no validation example has a defined baseline forecast");
    const train::NmspMetrics m = train::evaluate_nmsp(params, std::span<const features::NmspExample>(examples));
    std::vector<std::vector<double>> targets, base;
    for (const auto& e : examples) {
      targets.emplace_back(e.target.begin(), e.target.end());
      if (e.baseline) base.emplace_back(e.baseline->begin(), e.baseline->end());
    }
    summary["examples"] = examples.size();
    summary["model_global_mse"] = m.global_mse;
    if (a.baseline) {
      const auto bs = analytics::pooled_stat_metrics(base, targets, kNumTeamStats);
      const double bmse = analytics::global_mse(base, targets);
      const double pct = analytics::pct_improvement(bmse, m.global_mse);
      table = "stat\tbaseline rmse|δ\tmodel rmse|δ\t%δ diff\n";
      for (std::size_t j = 0; j < bs.size(); ++j) {
        std::string diff = "n/a";
        if (bs[j].delta && m.per_stat[j].delta) {
          const int d = analytics::delta_diff_points(*bs[j].delta, *m.per_stat[j].delta);
          diff = (d > 0 ? "+" : "") + std::to_string(d);
        }
        table += bs[j].name + '\t' + cell(bs[j]) + '\t' + cell(m.per_stat[j]) + '\t' + diff + '\n';
      }
      summary["baseline_global_mse"] = bmse;
      summary["pct_improvement"] = analytics::format_pct(pct);
      std::cout << table << "global MSE: baseline " << fixed(bmse) << ", model " << fixed(m.global_mse)
                << "\n% improvement: " << analytics::format_pct(pct) << '\n';
    } else {
      table = "stat\tmodel rmse|δ\n";
      for (const auto& s : m.per_stat) table += s.name + '\t' + cell(s) + '\n';
      std::cout << table << "global MSE: model " << fixed(m.global_mse) << '\n';
    }
  }

  if (!a.out.empty()) {
    fs::create_directories(a.out);
    RunRecord rec;
    rec.command = "eval";
    rec.config = {{"baseline", a.baseline}};
    rec.inputs = {ck, cd.corpus_file, cd.vocab_file};
    const path summary_file = a.out / "eval_summary.json";
    write_file(summary_file, summary.dump(2) + "\n");
    rec.artifacts.push_back(summary_file);
    if (!table.empty()) {
      write_file(a.out / "stat_report.tsv", table);
      rec.artifacts.push_back(a.out / "stat_report.tsv");
    }
    record_run(a.out, rec);
  }
  return 0;
}

}  // namespace

int cmd_eval(const EvalArgs& a) {
  const path ck = checkpoint_dir(a.checkpoint);
  const CorpusDir cd = open_corpus(a.corpus);
  if (model::checkpoint_precision(ck) == "float64") return eval_checkpoint<double>(a, ck, cd);
  return eval_checkpoint<float>(a, ck, cd);
}

}  // namespace rb::cli
