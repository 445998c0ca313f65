#include <cmath>
#include <cstdio>

#include "rb/analytics/analytics.hpp"
#include "rb/common/error.hpp"
#include "rb/common/stats_schema.hpp"

namespace rb::analytics {

std::optional<std::vector<double>> baseline_last5(std::span<const std::vector<double>> history,
                                                  std::size_t target_index, std::size_t window) {
  if (target_index == 0 || window == 0) return std::nullopt;
  if (target_index > history.size()) {
    throw DimensionError("baseline: target index " + std::to_string(target_index) + " beyond history of " +
                         std::to_string(history.size()));
  }
  const std::size_t first = target_index > window ? target_index - window : 0;
  const std::size_t width = history[first].size();
  std::vector<double> mean(width, 0.0);
  for (std::size_t i = first; i < target_index; ++i) {
    if (history[i].size() != width) throw DimensionError("baseline: ragged history");
    for (std::size_t j = 0; j < width; ++j) mean[j] += history[i][j];
  }
  const double n = static_cast<double>(target_index - first);
  for (double& v : mean) v /= n;
  return mean;
}

std::optional<double> dispersion(double rmse, double target_mean) {
  if (!(target_mean > 0.0)) return std::nullopt;
  return rmse / target_mean;
}

double pct_improvement(double baseline_mse, double model_mse) {
  if (!(baseline_mse > 0.0)) throw DomainError("pct_improvement: baseline MSE must be positive");
  return 100.0 * (baseline_mse - model_mse) / baseline_mse;
}

std::string format_pct(double pct) {
  // The guard keeps values such as 37.70 from printing as 37.69 after scaling.
  const double cents = std::trunc(pct * 100.0 + std::copysign(1e-7, pct));
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", cents / 100.0);
  return buf;
}

int delta_diff_points(double delta_baseline, double delta_model) {
  return static_cast<int>(std::lround(100.0 * (delta_baseline - delta_model)));
}

namespace {

void check_same_shape(std::span<const std::vector<double>> a, std::span<const std::vector<double>> b) {
  if (a.size() != b.size()) {
    throw DimensionError("metrics: " + std::to_string(a.size()) + " predictions vs " +
                         std::to_string(b.size()) + " targets");
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size()) {
      throw DimensionError("metrics: row " + std::to_string(i) + " has width " + std::to_string(a[i].size()) +
                           " vs " + std::to_string(b[i].size()));
    }
  }
}

}  // namespace

std::vector<StatMetric> pooled_stat_metrics(std::span<const std::vector<double>> predictions,
                                            std::span<const std::vector<double>> targets,
                                            std::size_t n_stats) {
  check_same_shape(predictions, targets);
  if (predictions.empty()) throw DomainError("metrics: empty evaluation set");
  std::vector<StatMetric> out(n_stats);
  for (std::size_t j = 0; j < n_stats; ++j) {
    double sq = 0.0;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      if (predictions[i].size() != 2 * n_stats) throw DimensionError("metrics: row width is not 2 * n_stats");
      for (std::size_t slot : {j, j + n_stats}) {
        const double d = predictions[i][slot] - targets[i][slot];
        sq += d * d;
        sum += targets[i][slot];
        ++count;
      }
    }
    StatMetric& m = out[j];
    m.name = n_stats == kNumTeamStats ? std::string(kTeamTargetLabels[j]) : "stat_" + std::to_string(j);
    m.rmse = std::sqrt(sq / static_cast<double>(count));
    m.target_mean = sum / static_cast<double>(count);
    m.delta = dispersion(m.rmse, m.target_mean);
  }
  return out;
}

double global_mse(std::span<const std::vector<double>> predictions,
                  std::span<const std::vector<double>> targets) {
  check_same_shape(predictions, targets);
  double sq = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    for (std::size_t j = 0; j < predictions[i].size(); ++j) {
      const double d = predictions[i][j] - targets[i][j];
      sq += d * d;
      ++count;
    }
  }
  if (count == 0) throw DomainError("metrics: empty evaluation set");
  return sq / static_cast<double>(count);
}

}  // namespace rb::analytics
