// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tivgan/nn/tensor.hpp"

namespace tivgan::nn {

/// Trainable weight with its accumulated gradient.
template <typename S>
struct Parameter {
  std::string name;
  std::uint64_t id = 0;
  Tensor<S> value;
  Tensor<S> grad;

  Parameter() = default;
  Parameter(std::string name_, std::uint64_t id_, Tensor<S> value_)
      : name(std::move(name_)), id(id_), value(std::move(value_)), grad(value.shape()) {}

  void zero_grad() { grad.fill(S{0}); }
};

/// Hands out parameter ids. One allocator per model bundle keeps ids stable
/// across processes for the same construction order.
class IdAllocator {
 public:
  explicit IdAllocator(std::uint64_t next = 1) : next_(next) {}
  std::uint64_t take() { return next_++; }
  std::uint64_t peek() const { return next_; }
  void reset(std::uint64_t next) { next_ = next; }

 private:
  std::uint64_t next_;
};

template <typename S>
class Graph;

/// Handle to a node recorded on a Graph.
template <typename S>
class Var {
 public:
  Var() = default;
  Var(Graph<S>* graph, int index) : graph_(graph), index_(index) {}

  Graph<S>& graph() const { return *graph_; }
  int index() const { return index_; }
  bool valid() const { return graph_ != nullptr; }

  const Tensor<S>& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;

 private:
  Graph<S>* graph_ = nullptr;
  int index_ = -1;
};

/// Define-by-run tape. Ops append nodes in topological order, so backward()
/// is a single reverse sweep.
template <typename S>
class Graph {
 public:
  /// Reads the node's gradient and accumulates into its parents.
  using BackwardFn = std::function<void(Graph&, int)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var<S> constant(Tensor<S> value);
  /// Leaf whose gradient is kept and readable through grad().
  Var<S> variable(Tensor<S> value);
  /// Leaf bound to a Parameter; repeated binds within one graph share a node.
  Var<S> parameter(Parameter<S>& p);
  /// Later binds of these parameters yield constants: no gradient flows or
  /// accumulates into them.
  void freeze(const std::vector<Parameter<S>*>& params);

  /// Records an op result. `backward` is dropped when no parent needs grad.
  Var<S> record(Tensor<S> value, std::initializer_list<Var<S>> parents, BackwardFn backward);
  Var<S> record(Tensor<S> value, const std::vector<Var<S>>& parents, BackwardFn backward);

  const Tensor<S>& value(int node) const { return nodes_[static_cast<std::size_t>(node)].value; }
  bool requires_grad(int node) const { return nodes_[static_cast<std::size_t>(node)].requires_grad; }
  /// Gradient buffer of `node`, zero-allocated on first access.
  Tensor<S>& grad(int node);
  const Tensor<S>& grad(const Var<S>& v) const;
  bool has_grad(int node) const { return nodes_[static_cast<std::size_t>(node)].has_grad; }

  /// Seeds d(loss)/d(loss) = 1 and accumulates into every reachable Parameter.
  void backward(const Var<S>& loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<S> value;
    Tensor<S> grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
    Parameter<S>* param = nullptr;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<S>*, int> bound_;
  std::unordered_set<const Parameter<S>*> frozen_;
};

template <typename S>
const Tensor<S>& Var<S>::value() const {
  return graph_->value(index_);
}

template <typename S>
bool Var<S>::requires_grad() const {
  return graph_->requires_grad(index_);
}

extern template struct Parameter<float>;
extern template struct Parameter<double>;
extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace tivgan::nn
