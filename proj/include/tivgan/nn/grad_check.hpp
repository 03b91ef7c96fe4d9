// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>

#include "tivgan/nn/autodiff.hpp"
#include "tivgan/util/rng.hpp"

namespace tivgan::nn {

/// max over coordinates of |a - n| / max(1e-8, |a| + |n|), where `a` is the
/// analytic gradient and `n` the central difference with step `epsilon`.
double relative_error(double analytic, double numeric);

/// Checks d f / d x at `point`. `f` must build a scalar from its input var.
/// Throws NumericError if f is non-finite anywhere it is evaluated.
double grad_check(const std::function<Var<double>(Graph<double>&, const Var<double>&)>& f,
                  const Tensor<double>& point, double epsilon);

/// Same check against network parameters. `loss` rebuilds the graph from the
/// current parameter values on every call. When `coords_per_param` is
/// positive, that many coordinates per tensor are drawn from `rng`;
/// otherwise every coordinate is checked.
double grad_check_parameters(const std::function<Var<double>(Graph<double>&)>& loss,
                             std::span<Parameter<double>* const> params, double epsilon,
                             std::int64_t coords_per_param = 0, Rng* rng = nullptr);

}  // namespace tivgan::nn
