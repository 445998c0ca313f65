#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rb/numcore/graph.hpp"

namespace rb::num {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// First/second moments per parameter plus the step counter.
template <class T>
struct AdamWState {
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
  std::int64_t t = 0;

  /// Zero moments shaped like `params`.
  static AdamWState for_params(std::span<Parameter<T>* const> params);
};

/// One AdamW update with decoupled weight decay:
///   p <- p - lr * wd * p
///   p <- p - lr * m_hat / (sqrt(v_hat) + eps)
/// Gradients are checked first; a non-finite entry throws TrainingError naming
/// the parameter and leaves every parameter untouched.
template <class T>
void adamw_step(std::span<Parameter<T>* const> params, AdamWState<T>& state, double lr, const AdamWConfig& cfg);

/// Linear warmup from 0 to base_lr over warmup_ratio * total_steps, then linear
/// decay to 0 at total_steps. warmup_ratio = 0 starts the decay at base_lr.
double lr_at(std::int64_t step, std::int64_t total_steps, double base_lr, double warmup_ratio);

}  // namespace rb::num
