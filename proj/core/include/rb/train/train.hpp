#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rb/analytics/analytics.hpp"
#include "rb/features/corpus_io.hpp"
#include "rb/model/model.hpp"

namespace rb::train {

enum class Task { Mpp, Nmsp };

std::string to_string(Task t);
Task task_from_string(const std::string& s);

struct TrainConfig {
  model::ModelConfig model;
  Task task = Task::Mpp;
  std::size_t batch_size = 256;
  double base_lr = 1e-4;
  double warmup_ratio = 0.0;
  double weight_decay = 0.01;
  /// Exactly one of epochs / total_steps is non-zero.
  std::int64_t epochs = 0;
  std::int64_t total_steps = 0;
  std::uint64_t seed = 0;
  /// Evaluate every this many epochs (and after the last step).
  std::int64_t eval_every_epochs = 1;
  /// Also report metrics on the training set at each evaluation.
  bool eval_train = false;
  /// Stop early once the training top-1 accuracy reaches this value (MPP only;
  /// requires eval_train).
  std::optional<double> stop_at_train_top1;
  /// Standardize stat inputs (and NMSP targets) with statistics of the training split.
  bool normalize_inputs = true;
  bool normalize_targets = true;
  /// Where the final checkpoint and metrics log go; empty = nothing written.
  std::filesystem::path output_dir;

  /// Throws ConfigError when sizes or rates are out of range.
  void validate() const;
};

struct EvalRecord {
  std::int64_t step = 0;
  std::int64_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::optional<double> val_top1, val_top3;  // MPP
  std::optional<double> val_global_mse;      // NMSP
  std::optional<double> train_top1;          // with eval_train

  bool operator==(const EvalRecord&) const = default;
};

struct RunReport {
  Task task = Task::Mpp;
  std::vector<EvalRecord> records;
  std::int64_t steps = 0;
  std::int64_t epochs = 0;
  std::int64_t steps_per_epoch = 0;
  std::size_t parameter_count = 0;
  double wall_seconds = 0.0;
  std::filesystem::path checkpoint_path;

  const EvalRecord& final_record() const;
};

/// Line-delimited metrics: one "eval" record per evaluation and a closing
/// "summary" record. Wall time is left out so reruns produce identical bytes.
std::string metrics_log(const RunReport& report);

template <class T>
struct TrainResult {
  RunReport report;
  model::ModelParams<T> params;
};

struct MppMetrics {
  double cross_entropy = 0.0;
  double top1 = 0.0;
  double top3 = 0.0;
  std::size_t positions = 0;
};

/// Running tally of masked-position metrics.
struct MppTally {
  double ce_sum = 0.0;
  std::size_t top1 = 0;
  std::size_t top3 = 0;
  std::size_t positions = 0;

  /// Adds one position. Rank of the target = number of logits strictly above it
  /// plus equal logits at smaller indices; a top-k hit means rank < k.
  template <class T>
  void add(std::span<const T> logits, int target);
  MppMetrics metrics() const;
};

template <class T>
MppMetrics evaluate_mpp(const model::ModelParams<T>& params, std::span<const features::MaskedMatch> samples);

/// Masked-position logits of one sample, [n_masked, vocab] row-major.
template <class T>
std::vector<T> mpp_sample_logits(const model::ModelParams<T>& params, const features::MaskedMatch& sample);

struct NmspMetrics {
  double global_mse = 0.0;
  std::vector<analytics::StatMetric> per_stat;
  std::vector<std::vector<double>> predictions;
};

template <class T>
std::vector<double> predict_nmsp(const model::ModelParams<T>& params, const features::NmspExample& example);

template <class T>
NmspMetrics evaluate_nmsp(const model::ModelParams<T>& params, std::span<const features::NmspExample> examples);

/// Throws IntegrityError for an empty corpus, TrainingError on a non-finite loss.
/// `init` (when given) replaces the random initialization.
template <class T>
TrainResult<T> pretrain_mpp(std::span<const features::MaskedMatch> train, std::span<const features::MaskedMatch> val,
                            const TrainConfig& config, const model::ModelParams<T>* init = nullptr);

/// Fine-tunes from `pretrained` after a head swap, or from scratch when it is null.
template <class T>
TrainResult<T> finetune_nmsp(std::span<const features::NmspExample> train,
                             std::span<const features::NmspExample> val, const TrainConfig& config,
                             const model::ModelParams<T>* pretrained = nullptr);

/// ceil(n / batch) * epochs, or total_steps when set.
std::int64_t planned_steps(const TrainConfig& config, std::size_t n_train);

/// Column mean and population std (std < 1e-8 replaced by 1) over real tokens.
template <class T>
void fit_input_normalizer(model::Normalizers<T>& norm, std::span<const features::TokenizedMatch* const> matches);

struct SweepRow {
  std::string label;
  int n_layers = 0;
  int dim = 0;
  bool use_team_embeddings = true;
  std::size_t parameter_count = 0;
  std::int64_t steps = 0;
  std::optional<EvalRecord> final;
  std::string error;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // ranked: successful runs by validation loss, then failures
  std::vector<RunReport> reports;
};

/// Runs every configuration on the same corpus; a failing run is recorded and the
/// sweep continues.
SweepResult run_sweep(std::span<const TrainConfig> grid, const features::MppCorpus& corpus);

/// Tab-separated summary with one row per configuration.
std::string sweep_table(const SweepResult& result);

std::string config_label(const TrainConfig& c);

}  // namespace rb::train
