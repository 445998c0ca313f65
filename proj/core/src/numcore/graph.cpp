#include <sstream>

#include "rb/numcore/graph.hpp"

namespace rb::num {

std::string shape_string(std::span<const std::size_t> shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? ", " : "") << shape[i];
  out << ']';
  return out.str();
}

template <class T>
Var<T> Graph<T>::constant(Tensor<T> value) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  return {this, nodes_.size() - 1};
}

template <class T>
Var<T> Graph<T>::parameter(Parameter<T>& p) {
  Node& n = nodes_.emplace_back();
  n.external = &p.value;
  n.grad = &p.grad;
  n.requires_grad = true;
  return {this, nodes_.size() - 1};
}

template <class T>
Var<T> Graph<T>::constant_ref(const Tensor<T>& value) {
  Node& n = nodes_.emplace_back();
  n.external = &value;
  return {this, nodes_.size() - 1};
}

template <class T>
Var<T> Graph<T>::record(Tensor<T> value, std::span<const Var<T>> parents, BackwardFn backward) {
  bool needs = false;
  for (const Var<T>& p : parents) needs = needs || nodes_[p.id].requires_grad;
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.requires_grad = needs;
  if (needs) n.backward = std::move(backward);
  return {this, nodes_.size() - 1};
}

template <class T>
Var<T> Graph<T>::record(Tensor<T> value, std::initializer_list<Var<T>> parents, BackwardFn backward) {
  return record(std::move(value), std::span<const Var<T>>(parents.begin(), parents.size()), std::move(backward));
}

template <class T>
Tensor<T>& Graph<T>::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad == nullptr) {
    n.own_grad = Tensor<T>(value(id).shape());
    n.grad = &n.own_grad;
  }
  return *n.grad;
}

template <class T>
void Graph<T>::backward(Var<T> loss, T seed) {
  if (loss.graph != this) throw DimensionError("backward: loss belongs to another graph");
  const Tensor<T>& lv = value(loss.id);
  if (lv.size() != 1) throw DimensionError("backward: loss must be scalar, got shape " + shape_string(lv.shape()));
  visits_ = 0;
  if (!nodes_[loss.id].requires_grad) return;
  grad(loss.id)[0] += seed;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.backward || n.grad == nullptr) continue;
    n.backward(*this, id);
    ++visits_;
  }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace rb::num
