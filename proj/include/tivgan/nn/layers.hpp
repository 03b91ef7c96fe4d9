// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "tivgan/nn/ops.hpp"
#include "tivgan/util/rng.hpp"

namespace tivgan::nn {

/// Creates named, id-tagged parameters with the library's init rules.
class ParamFactory {
 public:
  ParamFactory(IdAllocator& ids, Rng& rng) : ids_(ids), rng_(rng) {}

  /// Centered uniform with bound sqrt(6 / fan_in).
  template <typename S>
  Parameter<S> he_uniform(std::string name, Shape shape, std::int64_t fan_in);
  template <typename S>
  Parameter<S> uniform(std::string name, Shape shape, double bound);
  template <typename S>
  Parameter<S> zeros(std::string name, Shape shape);

 private:
  IdAllocator& ids_;
  Rng& rng_;
};

template <typename S>
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, std::int64_t in, std::int64_t out, ParamFactory& f, bool bias = true);

  Var<S> forward(Graph<S>& g, const Var<S>& x);
  void collect(std::vector<Parameter<S>*>& out);

  Parameter<S> weight;  // [out, in]
  Parameter<S> bias;    // [out]; empty when disabled
};

template <typename S>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(const std::string& name, std::int64_t in, std::int64_t out, std::int64_t kernel, Conv2dOptions opt,
         ParamFactory& f);

  Var<S> forward(Graph<S>& g, const Var<S>& x);
  void collect(std::vector<Parameter<S>*>& out);

  Parameter<S> weight;  // [out, in, k, k]
  Parameter<S> bias;
  Conv2dOptions options;
};

template <typename S>
class ConvTranspose2d {
 public:
  ConvTranspose2d() = default;
  ConvTranspose2d(const std::string& name, std::int64_t in, std::int64_t out, std::int64_t kernel,
                  Conv2dOptions opt, ParamFactory& f);

  Var<S> forward(Graph<S>& g, const Var<S>& x);
  void collect(std::vector<Parameter<S>*>& out);

  Parameter<S> weight;  // [in, out, k, k]
  Parameter<S> bias;
  Conv2dOptions options;
};

template <typename S>
class Conv3d {
 public:
  Conv3d() = default;
  Conv3d(const std::string& name, std::int64_t in, std::int64_t out, std::int64_t kd, std::int64_t khw,
         Conv3dOptions opt, ParamFactory& f);

  Var<S> forward(Graph<S>& g, const Var<S>& x);
  void collect(std::vector<Parameter<S>*>& out);

  Parameter<S> weight;  // [out, in, kd, k, k]
  Parameter<S> bias;
  Conv3dOptions options;
};

/// Gated recurrent unit:
///   u  = sigmoid(W_u x + U_u h + b_u)
///   r  = sigmoid(W_r x + U_r h + b_r)
///   c  = tanh(W_c x + U_c (r * h) + b_c)
///   h' = (1 - u) * h + u * c
template <typename S>
class GruCell {
 public:
  GruCell() = default;
  GruCell(const std::string& name, std::int64_t input, std::int64_t hidden, ParamFactory& f);

  /// x [N, input], h [N, hidden] -> [N, hidden]
  Var<S> forward(Graph<S>& g, const Var<S>& x, const Var<S>& h);
  void collect(std::vector<Parameter<S>*>& out);

  std::int64_t input_size() const { return w_update.value.dim(1); }
  std::int64_t hidden_size() const { return u_update.value.dim(0); }

  Parameter<S> w_update, u_update, b_update;
  Parameter<S> w_reset, u_reset, b_reset;
  Parameter<S> w_cand, u_cand, b_cand;
};

}  // namespace tivgan::nn
