// SPDX-License-Identifier: Apache-2.0
#include "tivgan/nn/optimizer.hpp"

#include <cmath>

#include "tivgan/errors.hpp"

namespace tivgan::nn {

template <typename S>
void Adam<S>::step(std::span<Parameter<S>* const> params) {
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  const S b1 = static_cast<S>(config_.beta1), b2 = static_cast<S>(config_.beta2);
  const S lr = static_cast<S>(config_.learning_rate);
  const S eps = static_cast<S>(config_.epsilon);
  const S inv_c1 = static_cast<S>(1.0 / c1), inv_c2 = static_cast<S>(1.0 / c2);

  for (auto* p : params) {
    if (p->grad.shape() != p->value.shape())
      throw ShapeError("adam: gradient shape " + shape_string(p->grad.shape()) + " != parameter shape " +
                       shape_string(p->value.shape()) + " for " + p->name);
    auto [it, fresh] = moments_.try_emplace(p->id);
    auto& m = it->second;
    if (fresh) {
      m.first = Tensor<S>(p->value.shape());
      m.second = Tensor<S>(p->value.shape());
    } else if (m.first.shape() != p->value.shape()) {
      throw ShapeError("adam: moment buffer shape mismatch for " + p->name);
    }
    S* w = p->value.data();
    const S* gr = p->grad.data();
    S* m1 = m.first.data();
    S* m2 = m.second.data();
    for (std::int64_t i = 0; i < p->value.numel(); ++i) {
      m1[i] = b1 * m1[i] + (S{1} - b1) * gr[i];
      m2[i] = b2 * m2[i] + (S{1} - b2) * gr[i] * gr[i];
      const S mh = m1[i] * inv_c1;
      const S vh = m2[i] * inv_c2;
      w[i] -= lr * mh / (std::sqrt(vh) + eps);
    }
  }
}

template <typename S>
void Adam<S>::restore(AdamConfig config, std::int64_t steps, std::map<std::uint64_t, Moments> moments) {
  config_ = config;
  steps_ = steps;
  moments_ = std::move(moments);
}

template class Adam<float>;
template class Adam<double>;

}  // namespace tivgan::nn
