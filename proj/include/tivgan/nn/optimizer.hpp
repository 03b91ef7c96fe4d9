// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <span>

#include "tivgan/nn/autodiff.hpp"

namespace tivgan::nn {

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias-corrected moments. Moment buffers are keyed by parameter id,
/// so a replaced network (new ids) starts from fresh state.
template <typename S>
class Adam {
 public:
  struct Moments {
    Tensor<S> first;
    Tensor<S> second;
  };

  Adam() = default;
  explicit Adam(AdamConfig config) : config_(config) {}

  void step(std::span<Parameter<S>* const> params);

  const AdamConfig& config() const { return config_; }
  std::int64_t step_count() const { return steps_; }
  const std::map<std::uint64_t, Moments>& moments() const { return moments_; }

  /// Checkpoint restore.
  void restore(AdamConfig config, std::int64_t steps, std::map<std::uint64_t, Moments> moments);

 private:
  AdamConfig config_;
  std::int64_t steps_ = 0;
  std::map<std::uint64_t, Moments> moments_;
};

template <typename S>
void zero_grads(std::span<Parameter<S>* const> params) {
  for (auto* p : params) p->zero_grad();
}

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace tivgan::nn
