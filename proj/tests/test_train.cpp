#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "rb/common/digest.hpp"
#include "rb/common/error.hpp"
#include "rb/train/train.hpp"
#include "synth.hpp"

using namespace rb;
using namespace rb::train;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  ingest::Dataset ds;
  features::Vocabulary vocab;
  features::MppCorpus mpp;
  features::NmspCorpus nmsp;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture x;
    testkit::LeagueSpec spec;
    spec.n_teams = 4;
    spec.squad_size = 6;
    spec.rounds = 8;
    spec.seed = 12;
    x.ds = testkit::make_league(spec);
    x.vocab = features::build_vocabulary(x.ds);
    features::MppCorpusOptions o;
    o.augment = 2;
    o.seed = 3;
    x.mpp = features::build_mpp_corpus(x.ds, x.vocab, o);
    x.nmsp = features::build_nmsp_corpus(x.ds, x.vocab, {});
    return x;
  }();
  return f;
}

TrainConfig mpp_config(const Fixture& f, std::int64_t epochs = 3) {
  TrainConfig c;
  c.model = model::make_config(1, 16, static_cast<int>(f.vocab.total_size()), static_cast<int>(f.vocab.team_table_size()));
  c.task = Task::Mpp;
  c.batch_size = 8;
  c.base_lr = 3e-3;
  c.epochs = epochs;
  c.seed = 4;
  return c;
}

TrainConfig nmsp_config(const Fixture& f) {
  TrainConfig c = mpp_config(f, 2);
  c.task = Task::Nmsp;
  c.model.head = model::HeadKind::Nmsp;
  c.model.stat_input_width = static_cast<int>(kNmspFeatureWidth);
  c.warmup_ratio = 0.1;
  return c;
}

}  // namespace

TEST(MppTally, TieBreakByIndex) {
  MppTally t;
  const std::vector<double> flat{1, 1, 1, 1};
  t.add<double>(flat, 0);
  t.add<double>(flat, 2);
  t.add<double>(flat, 3);
  const auto m = t.metrics();
  EXPECT_DOUBLE_EQ(m.top1, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.top3, 2.0 / 3.0);
  EXPECT_NEAR(m.cross_entropy, std::log(4.0), 1e-12);
  EXPECT_THROW(MppTally{}.metrics(), DomainError);
}

TEST(MppTally, UniformLogitsChanceAccuracy) {
  const std::size_t V = 2602, n = 20000;
  const std::vector<float> logits(V, 0.0f);
  Rng rng(1);
  MppTally t;
  for (std::size_t i = 0; i < n; ++i) t.add<float>(logits, static_cast<int>(rng.below(V)));
  const double p = 1.0 / V, sigma = std::sqrt(p * (1 - p) / n);
  EXPECT_NEAR(t.metrics().top1, p, 3 * sigma);
  EXPECT_NEAR(t.metrics().cross_entropy, std::log(static_cast<double>(V)), 1e-9);
}

TEST(Config, Validation) {
  const auto& f = fixture();
  TrainConfig c = mpp_config(f);
  EXPECT_NO_THROW(c.validate());
  c.total_steps = 10;
  EXPECT_THROW(c.validate(), ConfigError);
  c = mpp_config(f);
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = mpp_config(f);
  c.task = Task::Nmsp;
  EXPECT_THROW(c.validate(), ConfigError);
  c = mpp_config(f);
  c.stop_at_train_top1 = 0.5;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(task_from_string("cls"), ConfigError);
}

TEST(PlannedSteps, CeilPerEpoch) {
  TrainConfig c;
  c.batch_size = 256;
  c.epochs = 3;
  EXPECT_EQ(planned_steps(c, 14336), 168);
  EXPECT_EQ(planned_steps(c, 257), 6);
  c.epochs = 0;
  c.total_steps = 11;
  EXPECT_EQ(planned_steps(c, 5), 11);
}

TEST(Pretrain, LossDecreasesAndMetricsConsistent) {
  const auto& f = fixture();
  TrainConfig c = mpp_config(f, 6);
  const auto r = pretrain_mpp<float>(f.mpp.train, f.mpp.validation, c);
  ASSERT_EQ(r.report.records.size(), 6u);
  EXPECT_LT(r.report.records.back().train_loss, r.report.records.front().train_loss);
  EXPECT_EQ(r.report.steps, 6 * r.report.steps_per_epoch);
  const auto m = evaluate_mpp(r.params, std::span<const features::MaskedMatch>(f.mpp.validation));
  EXPECT_DOUBLE_EQ(m.cross_entropy, r.report.final_record().val_loss);
  EXPECT_DOUBLE_EQ(m.top1, *r.report.final_record().val_top1);

  MppTally t;
  const std::size_t V = f.vocab.total_size();
  for (const auto& s : f.mpp.validation) {
    const auto logits = mpp_sample_logits(r.params, s);
    for (std::size_t j = 0; j < s.targets.size(); ++j)
      t.add<float>(std::span<const float>(logits).subspan(j * V, V), s.targets[j]);
  }
  EXPECT_EQ(t.metrics().top3, m.top3);
}

TEST(Pretrain, DeterministicMetricsLog) {
  const auto& f = fixture();
  TrainConfig c = mpp_config(f, 2);
  const auto a = pretrain_mpp<float>(f.mpp.train, f.mpp.validation, c);
  const auto b = pretrain_mpp<float>(f.mpp.train, f.mpp.validation, c);
  EXPECT_EQ(metrics_log(a.report), metrics_log(b.report));
  c.seed = 5;
  const auto d = pretrain_mpp<float>(f.mpp.train, f.mpp.validation, c);
  EXPECT_NE(metrics_log(a.report), metrics_log(d.report));
}

TEST(Pretrain, EarlyStopOnTrainAccuracy) {
  const auto& f = fixture();
  TrainConfig c = mpp_config(f, 50);
  c.eval_train = true;
  c.stop_at_train_top1 = 0.0;
  const auto r = pretrain_mpp<float>(f.mpp.train, f.mpp.validation, c);
  EXPECT_EQ(r.report.epochs, 1);
  EXPECT_TRUE(r.report.final_record().train_top1.has_value());
}

TEST(Pretrain, WritesCheckpointAndLog) {
  const auto& f = fixture();
  TrainConfig c = mpp_config(f, 1);
  c.output_dir = fs::temp_directory_path() / "rb_train_out";
  fs::remove_all(c.output_dir);
  const auto r = pretrain_mpp<float>(f.mpp.train, f.mpp.validation, c);
  EXPECT_TRUE(fs::exists(c.output_dir / "metrics.jsonl"));
  const auto back = model::load_checkpoint<float>(r.report.checkpoint_path);
  EXPECT_EQ(back.player_table.value, r.params.player_table.value);
  EXPECT_EQ(back.norm, r.params.norm);
}

TEST(Pretrain, NonFiniteInputIsTrainingError) {
  const auto& f = fixture();
  auto bad = std::make_shared<features::TokenizedMatch>(*f.mpp.train.front().base);
  bad->stats[0] = std::nan("");
  std::vector<features::MaskedMatch> train = f.mpp.train;
  train.front().base = bad;
  TrainConfig c = mpp_config(f, 1);
  EXPECT_THROW(pretrain_mpp<float>(train, f.mpp.validation, c), TrainingError);
}

TEST(Pretrain, EmptyCorpusRejected) {
  const auto& f = fixture();
  EXPECT_THROW(pretrain_mpp<float>({}, f.mpp.validation, mpp_config(f)), IntegrityError);
}

TEST(Finetune, FromPretrainedAndScratch) {
  const auto& f = fixture();
  TrainConfig pc = mpp_config(f, 1);
  const auto pre = pretrain_mpp<float>(f.mpp.train, f.mpp.validation, pc);
  const TrainConfig c = nmsp_config(f);
  const auto warm = finetune_nmsp<float>(f.nmsp.train, f.nmsp.validation, c, &pre.params);
  const auto cold = finetune_nmsp<float>(f.nmsp.train, f.nmsp.validation, c);
  EXPECT_TRUE(warm.report.final_record().val_global_mse.has_value());
  EXPECT_EQ(warm.params.player_table.value.shape(), cold.params.player_table.value.shape());
  const auto m = evaluate_nmsp(warm.params, std::span<const features::NmspExample>(f.nmsp.validation));
  EXPECT_DOUBLE_EQ(m.global_mse, *warm.report.final_record().val_global_mse);
  EXPECT_EQ(m.per_stat.size(), 18u);
  EXPECT_EQ(m.predictions.size(), f.nmsp.validation.size());

  TrainConfig other = c;
  other.model.dim = 32;
  other.model.n_heads = 2;
  EXPECT_THROW(finetune_nmsp<float>(f.nmsp.train, f.nmsp.validation, other, &pre.params), ConfigError);
}

TEST(Finetune, OutputNormalizerFitsTrainingMean) {
  const auto& f = fixture();
  const auto r = finetune_nmsp<double>(f.nmsp.train, f.nmsp.validation, nmsp_config(f));
  double mean0 = 0;
  for (const auto& e : f.nmsp.train) mean0 += e.target[0];
  mean0 /= static_cast<double>(f.nmsp.train.size());
  EXPECT_NEAR(r.params.norm.output_shift[0], mean0, 1e-9);
}

TEST(Sweep, RanksAndRecordsFailures) {
  const auto& f = fixture();
  std::vector<TrainConfig> grid{mpp_config(f, 1), mpp_config(f, 1), mpp_config(f, 1)};
  grid[1].model.use_team_embeddings = false;
  grid[2].model.n_heads = 3;
  const auto res = run_sweep(grid, f.mpp);
  ASSERT_EQ(res.rows.size(), 3u);
  EXPECT_TRUE(res.rows[0].final.has_value());
  EXPECT_TRUE(res.rows[1].final.has_value());
  EXPECT_LE(res.rows[0].final->val_loss, res.rows[1].final->val_loss);
  EXPECT_FALSE(res.rows[2].final.has_value());
  EXPECT_FALSE(res.rows[2].error.empty());
  const std::string table = sweep_table(res);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 4);
  EXPECT_NE(table.find("1l16d-noTE"), std::string::npos);
}
