#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rb/numcore/tensor.hpp"

namespace rb::num {

/// Learnable array with its accumulated gradient.
template <class T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Parameter() = default;
  Parameter(std::string n, Tensor<T> v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad.fill(T(0)); }
  std::size_t size() const noexcept { return value.size(); }
};

template <class T>
class Graph;

/// Handle to a node of a Graph.
template <class T>
struct Var {
  Graph<T>* graph = nullptr;
  std::size_t id = 0;

  const Tensor<T>& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

/// Tape of operations recorded in creation order. backward() walks the tape in
/// reverse, so each node is visited once after all of its consumers.
/// Gradients of parameter leaves accumulate straight into Parameter::grad;
/// callers zero those between steps.
template <class T>
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::size_t)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var<T> constant(Tensor<T> value);
  Var<T> parameter(Parameter<T>& p);
  /// Leaf that reads `value` in place without tracking a gradient.
  Var<T> constant_ref(const Tensor<T>& value);
  Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> parents, BackwardFn backward);
  Var<T> record(Tensor<T> value, std::span<const Var<T>> parents, BackwardFn backward);

  const Tensor<T>& value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.external ? *n.external : n.value;
  }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Gradient buffer of a node, zero-filled on first access.
  Tensor<T>& grad(std::size_t id);

  /// Reverse sweep from a scalar loss, seeding d(loss) = seed.
  /// Throws DimensionError when the loss is not [1, 1].
  void backward(Var<T> loss, T seed = T(1));

  std::size_t size() const noexcept { return nodes_.size(); }
  /// Number of nodes whose backward rule ran during the last sweep.
  std::size_t last_backward_visits() const noexcept { return visits_; }

 private:
  struct Node {
    Tensor<T> value;
    const Tensor<T>* external = nullptr;  // parameter value
    Tensor<T>* grad = nullptr;            // own_grad or the parameter's grad
    Tensor<T> own_grad;
    bool requires_grad = false;
    BackwardFn backward;
  };
  std::deque<Node> nodes_;  // deque keeps node addresses stable
  std::size_t visits_ = 0;
};

template <class T>
const Tensor<T>& Var<T>::value() const {
  return graph->value(id);
}

// ---------------------------------------------------------------------------
// Differentiable operations. All inputs are rank-2; shape mismatches throw
// DimensionError naming both shapes.
// ---------------------------------------------------------------------------

template <class T> Var<T> add(Var<T> a, Var<T> b);
/// x[N, C] + b[1, C] broadcast over rows.
template <class T> Var<T> add_row(Var<T> x, Var<T> b);
template <class T> Var<T> mul(Var<T> a, Var<T> b);
template <class T> Var<T> scale(Var<T> a, T s);
/// x * s + t with constant per-column s[1, C] and t[1, C].
template <class T> Var<T> affine_cols(Var<T> x, const Tensor<T>& s, const Tensor<T>& t);
template <class T> Var<T> matmul(Var<T> a, Var<T> b);
/// a · bᵀ.
template <class T> Var<T> matmul_nt(Var<T> a, Var<T> b);
template <class T> Var<T> transpose(Var<T> a);
/// x[N, in] · W[in, out] + b[1, out].
template <class T> Var<T> linear(Var<T> x, Var<T> w, Var<T> b);
template <class T> Var<T> relu(Var<T> a);
/// Row softmax; columns with key_mask[j] == 0 get probability 0. An empty mask
/// means all columns are valid. Throws DomainError when a row has no valid column.
template <class T> Var<T> softmax_rows(Var<T> a, std::span<const std::uint8_t> key_mask = {});
template <class T> Var<T> layer_norm(Var<T> x, Var<T> gain, Var<T> bias, T eps = T(1e-5));
/// Rows of `table` selected by `indices`.
template <class T> Var<T> embedding(Var<T> table, std::span<const int> indices);
template <class T> Var<T> gather_rows(Var<T> a, std::span<const int> indices);
/// [N, C] -> [1, N*C], row-major.
template <class T> Var<T> flatten(Var<T> a);
template <class T> Var<T> slice_cols(Var<T> a, std::size_t start, std::size_t len);
template <class T> Var<T> concat_cols(std::span<const Var<T>> parts);
template <class T> Var<T> sum(Var<T> a);
/// Mean over rows with mask[i] != 0 of -log softmax(logits[i])[targets[i]].
/// Throws DomainError when no row is active.
template <class T>
Var<T> cross_entropy(Var<T> logits, std::span<const int> targets, std::span<const std::uint8_t> mask);
/// Mean of squared differences over all entries.
template <class T> Var<T> mse_mean(Var<T> pred, const Tensor<T>& target);

// Plain (non-recording) kernels shared with tests and benchmarks.

/// C[M,N] (+)= A[M,K] · B[K,N].
template <class T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate);
/// C[K,N] += A[M,K]ᵀ · B[M,N].
template <class T>
void gemm_tn_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n);

}  // namespace rb::num
