#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "rb/common/rng.hpp"
#include "rb/model/model.hpp"
#include "rb/numcore/graph.hpp"

namespace rb::testkit {

struct FdResult {
  double max_rel = 0.0;
  std::string worst;
  std::size_t checked = 0;
  std::size_t skipped = 0;

  void merge(const FdResult& o) {
    if (o.max_rel > max_rel) {
      max_rel = o.max_rel;
      worst = o.worst;
    }
    checked += o.checked;
    skipped += o.skipped;
  }
};

// Gradients whose norm stays below kFdZeroFloor * max(1, |loss|) on both sides
// count as zero; the difference quotient cannot resolve less. Some gradients
// vanish identically (a key bias shifts every score of a row equally).
inline constexpr double kFdZeroFloor = 1e-4;

// Norm-wise relative error ||a - n|| / max(||a||, ||n||, floor) per parameter,
// over a sample of at most `max_per_param` entries (all entries when 0). The
// numeric side is a five-point central stencil of `loss` in double precision.
// A coordinate whose h and 2h central differences disagree has a relu kink
// inside the stencil; it is skipped and counted.
inline FdResult compare_fd(const std::vector<num::Parameter<double>*>& params,
                           const std::vector<std::vector<double>>& analytic, const std::function<double()>& loss,
                           double h, std::size_t max_per_param, Rng& rng) {
  FdResult out;
  const double floor = kFdZeroFloor * std::max(1.0, std::abs(loss()));
  for (std::size_t k = 0; k < params.size(); ++k) {
    num::Parameter<double>& p = *params[k];
    std::vector<std::size_t> idx(p.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    if (max_per_param > 0 && idx.size() > max_per_param) {
      rng.shuffle(std::span<std::size_t>(idx));
      idx.resize(max_per_param);
    }
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t i : idx) {
      const double saved = p.value[i];
      auto at = [&](double off) {
        p.value[i] = saved + off;
        return loss();
      };
      const double m2 = at(-2 * h), m1 = at(-h), p1 = at(h), p2 = at(2 * h);
      p.value[i] = saved;
      const double c1 = (p1 - m1) / (2 * h), c2 = (p2 - m2) / (4 * h);
      if (std::abs(c2 - c1) > 1e-8 + 1e-6 * std::abs(c1)) {
        ++out.skipped;
        continue;
      }
      const double numeric = (4 * c1 - c2) / 3;
      const double a = analytic[k][i];
      diff2 += (a - numeric) * (a - numeric);
      a2 += a * a;
      n2 += numeric * numeric;
      ++out.checked;
    }
    const double denom = std::max({std::sqrt(a2), std::sqrt(n2), floor});
    const double rel = std::sqrt(diff2) / denom;
    if (rel > out.max_rel) {
      out.max_rel = rel;
      out.worst = p.name;
    }
  }
  return out;
}

template <class T>
std::vector<double> to_double(const num::Tensor<T>& t) {
  return {t.values().begin(), t.values().end()};
}

// Checks op(g, vars) against finite differences. The op output is reduced to a
// scalar through a fixed random weighting so every output entry matters.
// `op` must be callable for Graph<T> and Graph<double>.
template <class T, class Op>
FdResult check_op(const std::string& name, Op&& op, const std::vector<num::Tensor<double>>& inputs, std::uint64_t seed,
                  double h = 1e-5) {
  Rng rng(seed);
  std::vector<num::Parameter<double>> pd;
  for (std::size_t i = 0; i < inputs.size(); ++i) pd.emplace_back(name + "#" + std::to_string(i), inputs[i]);

  num::Tensor<double> weights;
  {
    num::Graph<double> g;
    std::vector<num::Var<double>> vars;
    for (auto& p : pd) vars.push_back(g.constant(p.value));
    const num::Tensor<double>& out = op(g, vars).value();
    weights = num::Tensor<double>(out.shape());
    for (std::size_t i = 0; i < weights.size(); ++i) weights[i] = rng.uniform(-1.0, 1.0);
  }

  std::vector<num::Parameter<T>> pt;
  for (auto& p : pd) pt.emplace_back(p.name, num::cast<T>(p.value));
  std::vector<std::vector<double>> analytic;
  {
    num::Graph<T> g;
    std::vector<num::Var<T>> vars;
    for (auto& p : pt) vars.push_back(g.parameter(p));
    auto out = op(g, vars);
    auto loss = num::sum(num::mul(out, g.constant(num::cast<T>(weights))));
    g.backward(loss);
    for (auto& p : pt) analytic.push_back(to_double(p.grad));
  }

  auto loss = [&] {
    num::Graph<double> g;
    std::vector<num::Var<double>> vars;
    for (auto& p : pd) vars.push_back(g.constant(p.value));
    return num::sum(num::mul(op(g, vars), g.constant(weights))).value()[0];
  };
  std::vector<num::Parameter<double>*> ptrs;
  for (auto& p : pd) ptrs.push_back(&p);
  return compare_fd(ptrs, analytic, loss, h, 0, rng);
}

template <class To, class From>
model::ModelParams<To> cast_params(const model::ModelParams<From>& src) {
  model::ModelParams<To> dst = model::init_model<To>(src.config, 0);
  std::vector<const num::Parameter<From>*> from;
  src.for_each([&](const num::Parameter<From>& p) { from.push_back(&p); });
  std::size_t k = 0;
  dst.for_each([&](num::Parameter<To>& p) { p = num::Parameter<To>(p.name, num::cast<To>(from[k++]->value)); });
  dst.norm.input_shift = num::cast<To>(src.norm.input_shift);
  dst.norm.input_scale = num::cast<To>(src.norm.input_scale);
  dst.norm.output_shift = num::cast<To>(src.norm.output_shift);
  dst.norm.output_scale = num::cast<To>(src.norm.output_scale);
  return dst;
}

// Full-model check: `loss_of(graph, bound)` builds the scalar loss. Analytic
// gradients come from a T-precision copy of `params`.
template <class T, class LossFn>
FdResult check_model(model::ModelParams<double> params, LossFn&& loss_of, std::uint64_t seed,
                     std::size_t max_per_param = 12, double h = 1e-5) {
  Rng rng(seed);
  model::ModelParams<T> pt = cast_params<T>(params);
  pt.zero_grad();
  {
    num::Graph<T> g;
    auto b = model::bind(g, pt);
    g.backward(loss_of(g, b));
  }
  std::vector<std::vector<double>> analytic;
  pt.for_each([&](const num::Parameter<T>& p) { analytic.push_back(to_double(p.grad)); });

  auto loss = [&] {
    num::Graph<double> g;
    const model::ModelParams<double>& frozen = params;
    auto b = model::bind(g, frozen);
    return loss_of(g, b).value()[0];
  };
  return compare_fd(params.parameters(), analytic, loss, h, max_per_param, rng);
}

}  // namespace rb::testkit
