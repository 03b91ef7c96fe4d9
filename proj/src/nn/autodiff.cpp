// SPDX-License-Identifier: Apache-2.0
#include "tivgan/nn/autodiff.hpp"

#include "tivgan/errors.hpp"

namespace tivgan::nn {

template <typename S>
Var<S> Graph<S>::constant(Tensor<S> value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var<S>(this, static_cast<int>(nodes_.size()) - 1);
}

template <typename S>
Var<S> Graph<S>::variable(Tensor<S> value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var<S>(this, static_cast<int>(nodes_.size()) - 1);
}

template <typename S>
void Graph<S>::freeze(const std::vector<Parameter<S>*>& params) {
  for (const auto* p : params) frozen_.insert(p);
}

template <typename S>
Var<S> Graph<S>::parameter(Parameter<S>& p) {
  if (auto it = bound_.find(&p); it != bound_.end()) return Var<S>(this, it->second);
  Node n;
  n.value = p.value;
  if (!frozen_.contains(&p)) {
    n.requires_grad = true;
    n.param = &p;
  }
  nodes_.push_back(std::move(n));
  const int idx = static_cast<int>(nodes_.size()) - 1;
  bound_.emplace(&p, idx);
  return Var<S>(this, idx);
}

template <typename S>
Var<S> Graph<S>::record(Tensor<S> value, std::initializer_list<Var<S>> parents, BackwardFn backward) {
  bool needs = false;
  for (const auto& p : parents) {
    if (p.valid() && &p.graph() != this) throw InvalidInput("graph: op mixes vars from different graphs");
    needs = needs || (p.valid() && requires_grad(p.index()));
  }
  Node n;
  n.value = std::move(value);
  n.requires_grad = needs;
  if (needs) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var<S>(this, static_cast<int>(nodes_.size()) - 1);
}

template <typename S>
Var<S> Graph<S>::record(Tensor<S> value, const std::vector<Var<S>>& parents, BackwardFn backward) {
  bool needs = false;
  for (const auto& p : parents) {
    if (p.valid() && &p.graph() != this) throw InvalidInput("graph: op mixes vars from different graphs");
    needs = needs || (p.valid() && requires_grad(p.index()));
  }
  Node n;
  n.value = std::move(value);
  n.requires_grad = needs;
  if (needs) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var<S>(this, static_cast<int>(nodes_.size()) - 1);
}

template <typename S>
Tensor<S>& Graph<S>::grad(int node) {
  auto& n = nodes_[static_cast<std::size_t>(node)];
  if (!n.has_grad) {
    n.grad = Tensor<S>(n.value.shape());
    n.has_grad = true;
  }
  return n.grad;
}

template <typename S>
const Tensor<S>& Graph<S>::grad(const Var<S>& v) const {
  const auto& n = nodes_[static_cast<std::size_t>(v.index())];
  if (!n.has_grad) throw InvalidInput("graph: no gradient recorded for node " + std::to_string(v.index()));
  return n.grad;
}

template <typename S>
void Graph<S>::backward(const Var<S>& loss) {
  if (&loss.graph() != this) throw InvalidInput("backward: loss belongs to another graph");
  if (loss.value().numel() != 1)
    throw InvalidInput("backward: loss must be a scalar, got shape " + shape_string(loss.shape()));
  if (!requires_grad(loss.index())) return;
  grad(loss.index()).fill(S{1});
  for (int i = loss.index(); i >= 0; --i) {
    auto& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.has_grad) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param) {
      auto& pg = n.param->grad;
      if (pg.shape() != n.value.shape()) pg = Tensor<S>(n.value.shape());
      auto* dst = pg.data();
      const auto* src = n.grad.data();
      for (std::int64_t k = 0; k < pg.numel(); ++k) dst[k] += src[k];
    }
  }
}

template struct Parameter<float>;
template struct Parameter<double>;
template class Graph<float>;
template class Graph<double>;

}  // namespace tivgan::nn
