#include "rb/train/train.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rb/common/digest.hpp"
#include "rb/common/error.hpp"
#include "rb/common/rng.hpp"
#include "rb/numcore/optim.hpp"

namespace rb::train {

using features::MaskedMatch;
using features::NmspExample;
using features::TokenizedMatch;
using model::ModelParams;
using num::Graph;
using num::Tensor;

std::string to_string(Task t) { return t == Task::Mpp ? "mpp" : "nmsp"; }

Task task_from_string(const std::string& s) {
  if (s == "mpp") return Task::Mpp;
  if (s == "nmsp") return Task::Nmsp;
  throw ConfigError("unknown task '" + s + "' (expected mpp or nmsp)");
}

void TrainConfig::validate() const {
  model.validate();
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(base_lr >= 0.0)) throw ConfigError("base_lr must be non-negative");
  if (!(warmup_ratio >= 0.0 && warmup_ratio < 1.0)) throw ConfigError("warmup_ratio must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
  if ((epochs > 0) == (total_steps > 0)) throw ConfigError("set exactly one of epochs and total_steps");
  if (epochs < 0 || total_steps < 0) throw ConfigError("epochs and total_steps must be non-negative");
  if (eval_every_epochs < 1) throw ConfigError("eval_every_epochs must be at least 1");
  if (stop_at_train_top1 && !eval_train) throw ConfigError("stop_at_train_top1 requires eval_train");
  const model::HeadKind want = task == Task::Mpp ? model::HeadKind::Mpp : model::HeadKind::Nmsp;
  if (model.head != want) throw ConfigError("model head does not match the " + to_string(task) + " task");
}

const EvalRecord& RunReport::final_record() const {
  if (records.empty()) throw IntegrityError("run report has no evaluation record");
  return records.back();
}

std::string metrics_log(const RunReport& report) {
  std::string out;
  for (const EvalRecord& r : report.records) {
    nlohmann::ordered_json j;
    j["record"] = "eval";
    j["step"] = r.step;
    j["epoch"] = r.epoch;
    j["lr"] = r.lr;
    j["train_loss"] = r.train_loss;
    j["val_loss"] = r.val_loss;
    if (r.val_top1) j["val_top1"] = *r.val_top1;
    if (r.val_top3) j["val_top3"] = *r.val_top3;
    if (r.val_global_mse) j["val_global_mse"] = *r.val_global_mse;
    if (r.train_top1) j["train_top1"] = *r.train_top1;
    out += j.dump() + '\n';
  }
  nlohmann::ordered_json s;
  s["record"] = "summary";
  s["task"] = to_string(report.task);
  s["steps"] = report.steps;
  s["epochs"] = report.epochs;
  s["steps_per_epoch"] = report.steps_per_epoch;
  s["parameter_count"] = report.parameter_count;
  s["checkpoint"] = report.checkpoint_path.filename().string();
  out += s.dump() + '\n';
  return out;
}

template <class T>
void MppTally::add(std::span<const T> logits, int target) {
  const auto t = static_cast<std::size_t>(target);
  const T lt = logits[t];
  double mx = -std::numeric_limits<double>::infinity();
  for (T v : logits) mx = std::max(mx, static_cast<double>(v));
  double z = 0.0;
  for (T v : logits) z += std::exp(static_cast<double>(v) - mx);
  ce_sum += std::log(z) + mx - static_cast<double>(lt);
  std::size_t rank = 0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (logits[j] > lt || (logits[j] == lt && j < t)) ++rank;
  }
  top1 += rank < 1;
  top3 += rank < 3;
  ++positions;
}

MppMetrics MppTally::metrics() const {
  if (positions == 0) throw DomainError("no masked positions to evaluate");
  const double n = static_cast<double>(positions);
  return {ce_sum / n, static_cast<double>(top1) / n, static_cast<double>(top3) / n, positions};
}

template void MppTally::add<float>(std::span<const float>, int);
template void MppTally::add<double>(std::span<const double>, int);

namespace {

int mask_index(const model::ModelConfig& c) { return c.vocab_size - 2; }

template <class T>
num::Var<T> mpp_forward(Graph<T>& g, const model::Bound<T>& b, const MaskedMatch& s, std::vector<int>& players) {
  const TokenizedMatch& tm = *s.base;
  players = s.input_players(mask_index(*b.config));
  model::TokenInput in{&tm, players, tm.n_real};
  const auto mask = model::key_mask(tm, tm.n_real);
  auto x = model::encode(g, b, model::embed_inputs(g, b, in), mask);
  return model::mpp_logits(g, b, x, s.masked_positions);
}

template <class T>
num::Var<T> nmsp_forward(Graph<T>& g, const model::Bound<T>& b, const NmspExample& e) {
  model::TokenInput in{&e.tokens, {}, 0};
  const auto mask = model::key_mask(e.tokens);
  return model::nmsp_predict(g, b, model::encode(g, b, model::embed_inputs(g, b, in), mask));
}

}  // namespace

template <class T>
std::vector<T> mpp_sample_logits(const ModelParams<T>& params, const MaskedMatch& sample) {
  Graph<T> g;
  auto b = model::bind(g, params);
  std::vector<int> players;
  return mpp_forward(g, b, sample, players).value().values();
}

template <class T>
MppMetrics evaluate_mpp(const ModelParams<T>& params, std::span<const MaskedMatch> samples) {
  MppTally tally;
  const std::size_t v = static_cast<std::size_t>(params.config.vocab_size);
  for (const MaskedMatch& s : samples) {
    const std::vector<T> logits = mpp_sample_logits(params, s);
    for (std::size_t j = 0; j < s.targets.size(); ++j) {
      tally.add(std::span<const T>(logits).subspan(j * v, v), s.targets[j]);
    }
  }
  return tally.metrics();
}

template <class T>
std::vector<double> predict_nmsp(const ModelParams<T>& params, const NmspExample& example) {
  Graph<T> g;
  auto b = model::bind(g, params);
  const auto& v = nmsp_forward(g, b, example).value().values();
  return {v.begin(), v.end()};
}

template <class T>
NmspMetrics evaluate_nmsp(const ModelParams<T>& params, std::span<const NmspExample> examples) {
  NmspMetrics m;
  std::vector<std::vector<double>> targets;
  for (const NmspExample& e : examples) {
    m.predictions.push_back(predict_nmsp(params, e));
    targets.emplace_back(e.target.begin(), e.target.end());
  }
  m.global_mse = analytics::global_mse(m.predictions, targets);
  m.per_stat = analytics::pooled_stat_metrics(m.predictions, targets, static_cast<std::size_t>(params.config.n_stats));
  return m;
}

std::int64_t planned_steps(const TrainConfig& config, std::size_t n_train) {
  if (config.total_steps > 0) return config.total_steps;
  const auto per_epoch = static_cast<std::int64_t>((n_train + config.batch_size - 1) / config.batch_size);
  return per_epoch * config.epochs;
}

namespace {

template <class T>
void fit_columns(Tensor<T>& shift, Tensor<T>& scale, std::size_t width,
                 const std::function<void(const std::function<void(const double*)>&)>& rows) {
  std::vector<double> sum(width, 0.0);
  std::size_t n = 0;
  rows([&](const double* r) {
    for (std::size_t j = 0; j < width; ++j) sum[j] += r[j];
    ++n;
  });
  if (n == 0) return;
  std::vector<double> mean(width);
  for (std::size_t j = 0; j < width; ++j) mean[j] = sum[j] / static_cast<double>(n);
  std::vector<double> sq(width, 0.0);
  rows([&](const double* r) {
    for (std::size_t j = 0; j < width; ++j) sq[j] += (r[j] - mean[j]) * (r[j] - mean[j]);
  });
  for (std::size_t j = 0; j < width; ++j) {
    const double sd = std::sqrt(sq[j] / static_cast<double>(n));
    shift[j] = static_cast<T>(mean[j]);
    scale[j] = static_cast<T>(sd < 1e-8 ? 1.0 : sd);
  }
}

}  // namespace

template <class T>
void fit_input_normalizer(model::Normalizers<T>& norm, std::span<const TokenizedMatch* const> matches) {
  if (matches.empty()) return;
  const std::size_t w = matches.front()->stat_width;
  if (norm.input_shift.size() != w) throw DimensionError("input normalizer width disagrees with the corpus");
  fit_columns<T>(norm.input_shift, norm.input_scale, w, [&](const std::function<void(const double*)>& f) {
    for (const TokenizedMatch* tm : matches)
      for (std::size_t i = 0; i < tm->n_real; ++i) f(tm->stats.data() + i * w);
  });
}

namespace {

struct LoopHooks {
  // Adds the gradient of one sample's (scaled) loss; returns its unscaled loss.
  std::function<double(std::size_t index, double weight)> sample;
  // Per-sample loss weight within a batch.
  std::function<double(std::size_t index)> weight;
  std::function<EvalRecord()> evaluate;
  std::function<bool(const EvalRecord&)> stop;
};

template <class T>
RunReport run_loop(ModelParams<T>& params, const TrainConfig& cfg, std::size_t n_train, const LoopHooks& hooks) {
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.task = cfg.task;
  report.parameter_count = params.parameter_count();
  const auto batch = static_cast<std::int64_t>(cfg.batch_size);
  report.steps_per_epoch = (static_cast<std::int64_t>(n_train) + batch - 1) / batch;
  const std::int64_t total = planned_steps(cfg, n_train);
  const std::int64_t n_epochs = (total + report.steps_per_epoch - 1) / report.steps_per_epoch;

  auto plist = params.parameters();
  auto state = num::AdamWState<T>::for_params(plist);
  num::AdamWConfig opt;
  opt.weight_decay = cfg.weight_decay;

  std::vector<std::size_t> order(n_train);
  std::int64_t step = 0;
  for (std::int64_t epoch = 0; epoch < n_epochs && step < total; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(cfg.seed, "shuffle/epoch-" + std::to_string(epoch)));
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    double weight_sum = 0.0;
    double lr = 0.0;
    for (std::size_t first = 0; first < n_train && step < total; first += cfg.batch_size) {
      const std::size_t last = std::min(n_train, first + cfg.batch_size);
      double wsum = 0.0;
      for (std::size_t i = first; i < last; ++i) wsum += hooks.weight(order[i]);
      params.zero_grad();
      double batch_loss = 0.0;
      for (std::size_t i = first; i < last; ++i) {
        const double w = hooks.weight(order[i]) / wsum;
        const double l = hooks.sample(order[i], w);
        if (!std::isfinite(l)) {
          throw TrainingError("non-finite loss at step " + std::to_string(step) + " (sample " +
                              std::to_string(order[i]) + ")");
        }
        batch_loss += w * l;
      }
      lr = num::lr_at(step, total, cfg.base_lr, cfg.warmup_ratio);
      num::adamw_step<T>(plist, state, lr, opt);
      ++step;
      loss_sum += batch_loss * wsum;
      weight_sum += wsum;
    }
    const bool last_epoch = epoch + 1 == n_epochs || step >= total;
    if ((epoch + 1) % cfg.eval_every_epochs == 0 || last_epoch) {
      EvalRecord r = hooks.evaluate();
      r.step = step;
      r.epoch = epoch + 1;
      r.lr = lr;
      r.train_loss = loss_sum / weight_sum;
      report.records.push_back(r);
      if (hooks.stop && hooks.stop(r)) break;
    }
  }
  report.steps = step;
  report.epochs = report.records.empty() ? 0 : report.records.back().epoch;
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

template <class T>
void finish(TrainResult<T>& result, const TrainConfig& cfg) {
  if (cfg.output_dir.empty()) return;
  result.report.checkpoint_path = cfg.output_dir / "checkpoint";
  nlohmann::json extra;
  extra["task"] = to_string(cfg.task);
  extra["steps"] = result.report.steps;
  extra["seed"] = cfg.seed;
  model::save_checkpoint(result.params, result.report.checkpoint_path, extra);
  write_file(cfg.output_dir / "metrics.jsonl", metrics_log(result.report));
}

}  // namespace

template <class T>
TrainResult<T> pretrain_mpp(std::span<const MaskedMatch> train, std::span<const MaskedMatch> val,
                            const TrainConfig& cfg, const ModelParams<T>* init) {
  cfg.validate();
  if (cfg.task != Task::Mpp) throw ConfigError("pretrain_mpp needs an mpp task configuration");
  if (train.empty()) throw IntegrityError("pretrain_mpp: empty training corpus");
  features::validate_mpp_samples(train);
  features::validate_mpp_samples(val);
  for (const MaskedMatch& s : train) {
    if (s.base->stat_width != static_cast<std::size_t>(cfg.model.stat_input_width)) {
      throw ConfigError("pretrain_mpp: corpus stat width does not match the model");
    }
  }

  TrainResult<T> result{{}, init ? *init : model::init_model<T>(cfg.model, derive_seed(cfg.seed, "init"))};
  ModelParams<T>& params = result.params;
  if (params.config != cfg.model) throw ConfigError("pretrain_mpp: initial parameters do not match the configuration");
  if (!init && cfg.normalize_inputs) {
    std::vector<const TokenizedMatch*> bases;
    std::set<const TokenizedMatch*> seen;
    for (const MaskedMatch& s : train)
      if (seen.insert(s.base.get()).second) bases.push_back(s.base.get());
    fit_input_normalizer(params.norm, bases);
  }

  LoopHooks hooks;
  hooks.weight = [&](std::size_t i) { return static_cast<double>(train[i].masked_positions.size()); };
  hooks.sample = [&](std::size_t i, double w) {
    Graph<T> g;
    auto b = model::bind(g, params);
    std::vector<int> players;
    auto logits = mpp_forward(g, b, train[i], players);
    const std::vector<std::uint8_t> all(train[i].targets.size(), 1);
    auto loss = num::cross_entropy(logits, std::span<const int>(train[i].targets), std::span<const std::uint8_t>(all));
    g.backward(loss, static_cast<T>(w));
    return static_cast<double>(loss.value()[0]);
  };
  hooks.evaluate = [&] {
    EvalRecord r;
    if (!val.empty()) {
      const MppMetrics m = evaluate_mpp(params, val);
      r.val_loss = m.cross_entropy;
      r.val_top1 = m.top1;
      r.val_top3 = m.top3;
    }
    if (cfg.eval_train) r.train_top1 = evaluate_mpp(params, train).top1;
    return r;
  };
  if (cfg.stop_at_train_top1) {
    hooks.stop = [&](const EvalRecord& r) { return r.train_top1 && *r.train_top1 >= *cfg.stop_at_train_top1; };
  }
  result.report = run_loop(params, cfg, train.size(), hooks);
  finish(result, cfg);
  return result;
}

template <class T>
TrainResult<T> finetune_nmsp(std::span<const NmspExample> train, std::span<const NmspExample> val,
                             const TrainConfig& cfg, const ModelParams<T>* pretrained) {
  cfg.validate();
  if (cfg.task != Task::Nmsp) throw ConfigError("finetune_nmsp needs an nmsp task configuration");
  if (train.empty()) throw IntegrityError("finetune_nmsp: empty training set");
  features::validate_nmsp_examples(train);
  features::validate_nmsp_examples(val);

  ModelParams<T> params;
  if (pretrained) {
    const model::ModelConfig& pc = pretrained->config;
    const model::ModelConfig& want = cfg.model;
    if (pc.n_layers != want.n_layers || pc.dim != want.dim || pc.n_heads != want.n_heads ||
        pc.ff_width != want.ff_width || pc.vocab_size != want.vocab_size || pc.n_positions != want.n_positions ||
        pc.n_teams != want.n_teams || pc.use_team_embeddings != want.use_team_embeddings ||
        pc.mlp_hidden_layers != want.mlp_hidden_layers || pc.seq_len != want.seq_len) {
      throw ConfigError("finetune_nmsp: checkpoint architecture does not match the configuration");
    }
    params = model::swap_head_for_nmsp(*pretrained, cfg.model.stat_input_width, derive_seed(cfg.seed, "head"));
  } else {
    params = model::init_model<T>(cfg.model, derive_seed(cfg.seed, "init"));
  }
  if (cfg.normalize_inputs) {
    std::vector<const TokenizedMatch*> ms;
    for (const NmspExample& e : train) ms.push_back(&e.tokens);
    fit_input_normalizer(params.norm, ms);
  }
  if (cfg.normalize_targets) {
    fit_columns<T>(params.norm.output_shift, params.norm.output_scale, kNmspTargetWidth,
                   [&](const std::function<void(const double*)>& f) {
                     for (const NmspExample& e : train) f(e.target.data());
                   });
  }

  std::vector<Tensor<T>> targets;
  for (const NmspExample& e : train) {
    targets.emplace_back(std::vector<std::size_t>{1, kNmspTargetWidth}, std::vector<T>(e.target.begin(), e.target.end()));
  }

  LoopHooks hooks;
  hooks.weight = [](std::size_t) { return 1.0; };
  hooks.sample = [&](std::size_t i, double w) {
    Graph<T> g;
    auto b = model::bind(g, params);
    auto loss = num::mse_mean(nmsp_forward(g, b, train[i]), targets[i]);
    g.backward(loss, static_cast<T>(w));
    return static_cast<double>(loss.value()[0]);
  };
  hooks.evaluate = [&] {
    EvalRecord r;
    if (!val.empty()) {
      const NmspMetrics m = evaluate_nmsp(params, val);
      r.val_loss = m.global_mse;
      r.val_global_mse = m.global_mse;
    }
    return r;
  };
  TrainResult<T> result{run_loop(params, cfg, train.size(), hooks), std::move(params)};
  finish(result, cfg);
  return result;
}

std::string config_label(const TrainConfig& c) {
  std::string s = std::to_string(c.model.n_layers) + "l" + std::to_string(c.model.dim) + "d";
  if (!c.model.use_team_embeddings) s += "-noTE";
  return s;
}

SweepResult run_sweep(std::span<const TrainConfig> grid, const features::MppCorpus& corpus) {
  SweepResult out;
  for (const TrainConfig& cfg : grid) {
    SweepRow row;
    row.label = config_label(cfg);
    row.n_layers = cfg.model.n_layers;
    row.dim = cfg.model.dim;
    row.use_team_embeddings = cfg.model.use_team_embeddings;
    try {
      row.parameter_count = model::parameter_count(cfg.model);
      auto r = pretrain_mpp<float>(corpus.train, corpus.validation, cfg);
      row.steps = r.report.steps;
      row.final = r.report.final_record();
      out.reports.push_back(std::move(r.report));
    } catch (const std::exception& e) {
      row.error = e.what();
      RunReport failed;
      failed.task = cfg.task;
      out.reports.push_back(std::move(failed));
    }
    out.rows.push_back(std::move(row));
  }
  std::stable_sort(out.rows.begin(), out.rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.final.has_value() != b.final.has_value()) return a.final.has_value();
    if (!a.final) return false;
    return a.final->val_loss < b.final->val_loss;
  });
  return out;
}

std::string sweep_table(const SweepResult& result) {
  std::ostringstream out;
  out.precision(6);
  out << "rank\tmodel\tlayers\tdim\tteam_embeddings\tparameters\tsteps\ttrain_loss\tval_loss\tval_top1\tval_top3\tstatus\n";
  std::size_t rank = 0;
  for (const SweepRow& r : result.rows) {
    out << ++rank << '\t' << r.label << '\t' << r.n_layers << '\t' << r.dim << '\t'
        << (r.use_team_embeddings ? "on" : "off") << '\t' << r.parameter_count << '\t' << r.steps << '\t';
    if (r.final) {
      out << std::fixed << r.final->train_loss << '\t' << r.final->val_loss << '\t' << r.final->val_top1.value_or(0.0)
          << '\t' << r.final->val_top3.value_or(0.0) << '\t' << "ok";
      out.unsetf(std::ios::fixed);
    } else {
      std::string msg = r.error;
      for (char& ch : msg)
        if (ch == '\t' || ch == '\n') ch = ' ';
      out << "-\t-\t-\t-\tfailed: " << msg;
    }
    out << '\n';
  }
  return out.str();
}

#define RB_INSTANTIATE(T)                                                                                       \
  template std::vector<T> mpp_sample_logits<T>(const ModelParams<T>&, const MaskedMatch&);                      \
  template MppMetrics evaluate_mpp<T>(const ModelParams<T>&, std::span<const MaskedMatch>);                     \
  template std::vector<double> predict_nmsp<T>(const ModelParams<T>&, const NmspExample&);                      \
  template NmspMetrics evaluate_nmsp<T>(const ModelParams<T>&, std::span<const NmspExample>);                   \
  template void fit_input_normalizer<T>(model::Normalizers<T>&, std::span<const TokenizedMatch* const>);        \
  template TrainResult<T> pretrain_mpp<T>(std::span<const MaskedMatch>, std::span<const MaskedMatch>,           \
                                          const TrainConfig&, const ModelParams<T>*);                           \
  template TrainResult<T> finetune_nmsp<T>(std::span<const NmspExample>, std::span<const NmspExample>,          \
                                           const TrainConfig&, const ModelParams<T>*);

RB_INSTANTIATE(float)
RB_INSTANTIATE(double)

#undef RB_INSTANTIATE

}  // namespace rb::train
