#include "rb/numcore/optim.hpp"

#include <cmath>

namespace rb::num {

template <class T>
AdamWState<T> AdamWState<T>::for_params(std::span<Parameter<T>* const> params) {
  AdamWState s;
  for (const Parameter<T>* p : params) {
    s.m.emplace_back(p->value.shape());
    s.v.emplace_back(p->value.shape());
  }
  return s;
}

template <class T>
void adamw_step(std::span<Parameter<T>* const> params, AdamWState<T>& state, double lr, const AdamWConfig& cfg) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw DimensionError("adamw: optimizer state covers " + std::to_string(state.m.size()) + " of " +
                         std::to_string(params.size()) + " parameters");
  }
  if (!(lr >= 0.0)) throw DomainError("adamw: learning rate must be non-negative");
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Parameter<T>& p = *params[k];
    if (p.grad.shape() != p.value.shape() || state.m[k].shape() != p.value.shape()) {
      throw DimensionError("adamw: shape mismatch for " + p.name);
    }
    for (T g : p.grad.values()) {
      if (!std::isfinite(g)) throw TrainingError("non-finite gradient in parameter " + p.name);
    }
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  const double decay = 1.0 - lr * cfg.weight_decay;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter<T>& p = *params[k];
    T* w = p.value.data();
    const T* g = p.grad.data();
    T* m = state.m[k].data();
    T* v = state.v[k].data();
    for (std::size_t i = 0, n = p.value.size(); i < n; ++i) {
      const double gi = g[i];
      const double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      const double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double mhat = mi / bc1;
      const double vhat = vi / bc2;
      double wi = static_cast<double>(w[i]) * decay;
      wi -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
      w[i] = static_cast<T>(wi);
    }
  }
}

double lr_at(std::int64_t step, std::int64_t total_steps, double base_lr, double warmup_ratio) {
  if (total_steps <= 0) return base_lr;
  const double s = static_cast<double>(step);
  const double total = static_cast<double>(total_steps);
  const double warm = warmup_ratio * total;
  if (s < warm) return base_lr * s / warm;
  if (s >= total) return 0.0;
  return base_lr * (total - s) / (total - warm);
}

template struct AdamWState<float>;
template struct AdamWState<double>;
template void adamw_step<float>(std::span<Parameter<float>* const>, AdamWState<float>&, double, const AdamWConfig&);
template void adamw_step<double>(std::span<Parameter<double>* const>, AdamWState<double>&, double,
                                 const AdamWConfig&);

}  // namespace rb::num
