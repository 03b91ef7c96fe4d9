// SPDX-License-Identifier: Apache-2.0
#include "tivgan/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "tivgan/errors.hpp"

namespace tivgan::nn {

template <typename S>
Parameter<S> ParamFactory::uniform(std::string name, Shape shape, double bound) {
  Tensor<S> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<S>(rng_.uniform(-bound, bound));
  return Parameter<S>(std::move(name), ids_.take(), std::move(t));
}

template <typename S>
Parameter<S> ParamFactory::he_uniform(std::string name, Shape shape, std::int64_t fan_in) {
  return uniform<S>(std::move(name), std::move(shape), std::sqrt(6.0 / static_cast<double>(fan_in)));
}

template <typename S>
Parameter<S> ParamFactory::zeros(std::string name, Shape shape) {
  return Parameter<S>(std::move(name), ids_.take(), Tensor<S>(std::move(shape)));
}

namespace {

template <typename S>
Var<S> bind_optional(Graph<S>& g, Parameter<S>& p) {
  return p.value.empty() ? Var<S>() : g.parameter(p);
}

template <typename S>
void push_nonempty(std::vector<Parameter<S>*>& out, Parameter<S>& p) {
  if (!p.value.empty()) out.push_back(&p);
}

}  // namespace

template <typename S>
Linear<S>::Linear(const std::string& name, std::int64_t in, std::int64_t out, ParamFactory& f, bool with_bias)
    : weight(f.he_uniform<S>(name + ".weight", {out, in}, in)) {
  if (with_bias) bias = f.zeros<S>(name + ".bias", {out});
}

template <typename S>
Var<S> Linear<S>::forward(Graph<S>& g, const Var<S>& x) {
  return linear(x, g.parameter(weight), bind_optional(g, bias));
}

template <typename S>
void Linear<S>::collect(std::vector<Parameter<S>*>& out) {
  out.push_back(&weight);
  push_nonempty(out, bias);
}

template <typename S>
Conv2d<S>::Conv2d(const std::string& name, std::int64_t in, std::int64_t out, std::int64_t kernel,
                  Conv2dOptions opt, ParamFactory& f)
    : weight(f.he_uniform<S>(name + ".weight", {out, in, kernel, kernel}, in * kernel * kernel)),
      bias(f.zeros<S>(name + ".bias", {out})),
      options(opt) {}

template <typename S>
Var<S> Conv2d<S>::forward(Graph<S>& g, const Var<S>& x) {
  return conv2d(x, g.parameter(weight), g.parameter(bias), options);
}

template <typename S>
void Conv2d<S>::collect(std::vector<Parameter<S>*>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

template <typename S>
ConvTranspose2d<S>::ConvTranspose2d(const std::string& name, std::int64_t in, std::int64_t out,
                                    std::int64_t kernel, Conv2dOptions opt, ParamFactory& f)
    // Each output pixel sees in * (k / stride)^2 taps.
    : weight(f.he_uniform<S>(name + ".weight", {in, out, kernel, kernel},
                             std::max<std::int64_t>(1, in * kernel * kernel / (opt.stride * opt.stride)))),
      bias(f.zeros<S>(name + ".bias", {out})),
      options(opt) {}

template <typename S>
Var<S> ConvTranspose2d<S>::forward(Graph<S>& g, const Var<S>& x) {
  return conv_transpose2d(x, g.parameter(weight), g.parameter(bias), options);
}

template <typename S>
void ConvTranspose2d<S>::collect(std::vector<Parameter<S>*>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

template <typename S>
Conv3d<S>::Conv3d(const std::string& name, std::int64_t in, std::int64_t out, std::int64_t kd, std::int64_t khw,
                  Conv3dOptions opt, ParamFactory& f)
    : weight(f.he_uniform<S>(name + ".weight", {out, in, kd, khw, khw}, in * kd * khw * khw)),
      bias(f.zeros<S>(name + ".bias", {out})),
      options(opt) {}

template <typename S>
Var<S> Conv3d<S>::forward(Graph<S>& g, const Var<S>& x) {
  return conv3d(x, g.parameter(weight), g.parameter(bias), options);
}

template <typename S>
void Conv3d<S>::collect(std::vector<Parameter<S>*>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

template <typename S>
GruCell<S>::GruCell(const std::string& name, std::int64_t input, std::int64_t hidden, ParamFactory& f) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  w_update = f.uniform<S>(name + ".w_update", {hidden, input}, bound);
  u_update = f.uniform<S>(name + ".u_update", {hidden, hidden}, bound);
  b_update = f.zeros<S>(name + ".b_update", {hidden});
  w_reset = f.uniform<S>(name + ".w_reset", {hidden, input}, bound);
  u_reset = f.uniform<S>(name + ".u_reset", {hidden, hidden}, bound);
  b_reset = f.zeros<S>(name + ".b_reset", {hidden});
  w_cand = f.uniform<S>(name + ".w_cand", {hidden, input}, bound);
  u_cand = f.uniform<S>(name + ".u_cand", {hidden, hidden}, bound);
  b_cand = f.zeros<S>(name + ".b_cand", {hidden});
}

template <typename S>
Var<S> GruCell<S>::forward(Graph<S>& g, const Var<S>& x, const Var<S>& h) {
  if (x.shape().size() != 2 || x.shape()[1] != input_size())
    throw ShapeError("gru_cell: input " + shape_string(x.shape()) + " expected [N, " +
                     std::to_string(input_size()) + "]");
  if (h.shape() != Shape{x.shape()[0], hidden_size()})
    throw ShapeError("gru_cell: hidden " + shape_string(h.shape()) + " expected [" +
                     std::to_string(x.shape()[0]) + ", " + std::to_string(hidden_size()) + "]");
  auto u = sigmoid(linear(x, g.parameter(w_update), g.parameter(b_update)) + linear(h, g.parameter(u_update)));
  auto r = sigmoid(linear(x, g.parameter(w_reset), g.parameter(b_reset)) + linear(h, g.parameter(u_reset)));
  auto c = tanh(linear(x, g.parameter(w_cand), g.parameter(b_cand)) + linear(r * h, g.parameter(u_cand)));
  return affine(u, -1.0, 1.0) * h + u * c;
}

template <typename S>
void GruCell<S>::collect(std::vector<Parameter<S>*>& out) {
  for (auto* p : {&w_update, &u_update, &b_update, &w_reset, &u_reset, &b_reset, &w_cand, &u_cand, &b_cand})
    out.push_back(p);
}

#define TIVGAN_INSTANTIATE_LAYERS(S)                                                      \
  template Parameter<S> ParamFactory::uniform<S>(std::string, Shape, double);            \
  template Parameter<S> ParamFactory::he_uniform<S>(std::string, Shape, std::int64_t);   \
  template Parameter<S> ParamFactory::zeros<S>(std::string, Shape);                      \
  template class Linear<S>;                                                              \
  template class Conv2d<S>;                                                              \
  template class ConvTranspose2d<S>;                                                     \
  template class Conv3d<S>;                                                              \
  template class GruCell<S>;

TIVGAN_INSTANTIATE_LAYERS(float)
TIVGAN_INSTANTIATE_LAYERS(double)

}  // namespace tivgan::nn
