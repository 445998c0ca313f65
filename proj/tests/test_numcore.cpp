#include <gtest/gtest.h>

#include <cmath>

#include "op_suite.hpp"
#include "rb/common/error.hpp"
#include "rb/numcore/optim.hpp"

using namespace rb;
using namespace rb::num;

namespace {

Tensor<double> make(std::size_t r, std::size_t c, std::vector<double> v) { return Tensor<double>({r, c}, std::move(v)); }

}  // namespace

TEST(Tensor, ZeroDimensionRejected) {
  EXPECT_THROW(Tensor<double>(0, 3), DimensionError);
  EXPECT_THROW(Tensor<double>({2, 2}, {1.0, 2.0}), DimensionError);
}

TEST(Ops, SoftmaxOfZerosIsUniform) {
  Graph<double> g;
  auto y = softmax_rows(g.constant(make(1, 3, {0, 0, 0})));
  for (double p : y.value().values()) EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
}

TEST(Ops, SoftmaxRespectsKeyMask) {
  Graph<double> g;
  const std::vector<std::uint8_t> mask{1, 0, 1};
  auto y = softmax_rows(g.constant(make(1, 3, {1, 50, 1})), std::span<const std::uint8_t>(mask));
  EXPECT_EQ(y.value()[1], 0.0);
  EXPECT_NEAR(y.value()[0], 0.5, 1e-15);
  const std::vector<std::uint8_t> none{0, 0, 0};
  EXPECT_THROW(softmax_rows(g.constant(make(1, 3, {1, 2, 3})), std::span<const std::uint8_t>(none)), DomainError);
}

TEST(Ops, LayerNormOfConstantRowIsBias) {
  Graph<double> g;
  auto y = layer_norm(g.constant(make(1, 4, {3, 3, 3, 3})), g.constant(make(1, 4, {2, 2, 2, 2})),
                      g.constant(make(1, 4, {0.1, 0.2, 0.3, 0.4})));
  EXPECT_NEAR(y.value()[0], 0.1, 1e-12);
  EXPECT_NEAR(y.value()[3], 0.4, 1e-12);
}

TEST(Ops, MatmulMatchesNaiveOracle) {
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const std::size_t m = 1 + rng.below(9), k = 1 + rng.below(9), n = 1 + rng.below(9);
    Tensor<double> a(m, k), b(k, n);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng.normal();
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = rng.normal();
    Graph<double> g;
    const auto& c = matmul(g.constant(a), g.constant(b)).value();
    const auto& ct = matmul_nt(g.constant(a), transpose(g.constant(b))).value();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0;
        for (std::size_t q = 0; q < k; ++q) s += a[i * k + q] * b[q * n + j];
        EXPECT_NEAR(c[i * n + j], s, 1e-12);
        EXPECT_NEAR(ct[i * n + j], s, 1e-12);
      }
  }
}

TEST(Ops, ShapeMismatchNamesShapes) {
  Graph<double> g;
  try {
    matmul(g.constant(Tensor<double>(2, 3)), g.constant(Tensor<double>(2, 3)));
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("[2, 3]"), std::string::npos);
  }
  EXPECT_THROW(add(g.constant(Tensor<double>(2, 3)), g.constant(Tensor<double>(3, 2))), DimensionError);
}

TEST(Ops, CrossEntropyUniformIsLogV) {
  Graph<double> g;
  const std::vector<int> t{2};
  const std::vector<std::uint8_t> m{1};
  auto l = cross_entropy(g.constant(make(1, 4, {0, 0, 0, 0})), std::span<const int>(t), std::span<const std::uint8_t>(m));
  EXPECT_NEAR(l.value()[0], std::log(4.0), 1e-15);
  const std::vector<std::uint8_t> off{0};
  EXPECT_THROW(cross_entropy(g.constant(make(1, 4, {0, 0, 0, 0})), std::span<const int>(t), std::span<const std::uint8_t>(off)),
               DomainError);
}

TEST(Ops, EmbeddingOutOfRange) {
  Graph<double> g;
  const std::vector<int> idx{3};
  EXPECT_THROW(embedding(g.constant(Tensor<double>(3, 2)), std::span<const int>(idx)), DimensionError);
}

TEST(Autodiff, BackwardOfSumIsOnes) {
  Parameter<double> w("w", make(2, 3, {1, -2, 3, 4, 5, -6}));
  Graph<double> g;
  g.backward(sum(g.parameter(w)));
  for (double x : w.grad.values()) EXPECT_EQ(x, 1.0);
}

TEST(Autodiff, GradientsAccumulateAcrossGraphs) {
  Parameter<double> w("w", make(1, 2, {1, 2}));
  for (int i = 0; i < 3; ++i) {
    Graph<double> g;
    g.backward(sum(g.parameter(w)), 0.5);
  }
  EXPECT_EQ(w.grad[0], 1.5);
}

TEST(Autodiff, UnreachableParameterKeepsZeroGrad) {
  Parameter<double> a("a", make(1, 2, {1, 2})), b("b", make(1, 2, {3, 4}));
  Graph<double> g;
  auto va = g.parameter(a);
  g.parameter(b);
  g.backward(sum(va));
  for (double x : b.grad.values()) EXPECT_EQ(x, 0.0);
}

TEST(Autodiff, NonScalarLossRejected) {
  Parameter<double> a("a", make(1, 2, {1, 2}));
  Graph<double> g;
  EXPECT_THROW(g.backward(g.parameter(a)), DimensionError);
}

TEST(Autodiff, EachNodeVisitedOnce) {
  Parameter<double> a("a", make(1, 2, {1, 2}));
  Graph<double> g;
  auto x = g.parameter(a);
  auto y = add(x, x);
  auto z = mul(y, y);
  g.backward(sum(z));
  EXPECT_EQ(g.last_backward_visits(), 3u);
  EXPECT_EQ(a.grad[0], 8.0);  // d/dx (2x)^2 = 8x
}

TEST(FiniteDifference, OpsDouble) {
  for (std::uint64_t seed = 0; seed < 5; ++seed)
    for (const auto& c : testkit::run_op_suite<double>(seed)) EXPECT_LT(c.result.max_rel, 1e-6) << c.op << " seed " << seed;
}

TEST(FiniteDifference, OpsFloat) {
  for (std::uint64_t seed = 0; seed < 5; ++seed)
    for (const auto& c : testkit::run_op_suite<float>(seed)) EXPECT_LT(c.result.max_rel, 1e-3) << c.op << " seed " << seed;
}

TEST(AdamW, FirstStepMovesByLearningRate) {
  Parameter<double> w("w", make(1, 1, {1.0}));
  w.grad[0] = 1.0;
  std::vector<Parameter<double>*> ps{&w};
  auto state = AdamWState<double>::for_params(ps);
  adamw_step<double>(ps, state, 0.1, AdamWConfig{});
  EXPECT_NEAR(w.value[0], 0.9, 1e-6);
  EXPECT_EQ(state.t, 1);
}

TEST(AdamW, DecoupledDecayOnly) {
  Parameter<double> w("w", make(1, 1, {2.0}));
  std::vector<Parameter<double>*> ps{&w};
  auto state = AdamWState<double>::for_params(ps);
  AdamWConfig cfg;
  cfg.weight_decay = 0.01;
  adamw_step<double>(ps, state, 0.1, cfg);
  EXPECT_NEAR(w.value[0], 2.0 * (1 - 0.001), 1e-15);
}

TEST(AdamW, ZeroGradientZeroDecayIsNoOp) {
  Parameter<double> w("w", make(1, 2, {0.3, -0.7}));
  std::vector<Parameter<double>*> ps{&w};
  auto state = AdamWState<double>::for_params(ps);
  adamw_step<double>(ps, state, 0.1, AdamWConfig{});
  EXPECT_EQ(w.value[0], 0.3);
  EXPECT_EQ(w.value[1], -0.7);
}

TEST(AdamW, UpdateIndependentOfValueWithoutDecay) {
  Parameter<double> a("a", make(1, 1, {5.0})), b("b", make(1, 1, {-3.0}));
  a.grad[0] = b.grad[0] = 0.25;
  std::vector<Parameter<double>*> pa{&a}, pb{&b};
  auto sa = AdamWState<double>::for_params(pa);
  auto sb = AdamWState<double>::for_params(pb);
  adamw_step<double>(pa, sa, 0.01, AdamWConfig{});
  adamw_step<double>(pb, sb, 0.01, AdamWConfig{});
  EXPECT_NEAR(a.value[0] - 5.0, b.value[0] + 3.0, 1e-15);
}

TEST(AdamW, NonFiniteGradientNamesParameter) {
  Parameter<double> w("encoder.0.q.w", make(1, 1, {1.0}));
  w.grad[0] = std::nan("");
  std::vector<Parameter<double>*> ps{&w};
  auto state = AdamWState<double>::for_params(ps);
  try {
    adamw_step<double>(ps, state, 0.1, AdamWConfig{});
    FAIL();
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("encoder.0.q.w"), std::string::npos);
  }
  EXPECT_EQ(w.value[0], 1.0);
}

TEST(Schedule, WarmupThenLinearDecay) {
  EXPECT_DOUBLE_EQ(lr_at(0, 100, 1.0, 0.1), 0.0);
  EXPECT_DOUBLE_EQ(lr_at(5, 100, 1.0, 0.1), 0.5);
  EXPECT_DOUBLE_EQ(lr_at(10, 100, 1.0, 0.1), 1.0);
  EXPECT_DOUBLE_EQ(lr_at(55, 100, 1.0, 0.1), 0.5);
  EXPECT_DOUBLE_EQ(lr_at(100, 100, 1.0, 0.1), 0.0);
  EXPECT_DOUBLE_EQ(lr_at(0, 100, 2e-4, 0.0), 2e-4);
  EXPECT_DOUBLE_EQ(lr_at(50, 100, 2e-4, 0.0), 1e-4);
}

TEST(Schedule, MonotoneAfterWarmup) {
  double prev = lr_at(10, 1000, 1e-3, 0.01);
  for (std::int64_t s = 11; s <= 1000; ++s) {
    const double lr = lr_at(s, 1000, 1e-3, 0.01);
    EXPECT_LE(lr, prev);
    prev = lr;
  }
}
