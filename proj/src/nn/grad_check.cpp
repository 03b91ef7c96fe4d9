// SPDX-License-Identifier: Apache-2.0
#include "tivgan/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "tivgan/errors.hpp"

namespace tivgan::nn {

namespace {

double finite_or_throw(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string("grad_check: non-finite ") + what);
  return v;
}

}  // namespace

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

double grad_check(const std::function<Var<double>(Graph<double>&, const Var<double>&)>& f,
                  const Tensor<double>& point, double epsilon) {
  Tensor<double> analytic;
  {
    Graph<double> g;
    auto x = g.variable(point);
    auto y = f(g, x);
    finite_or_throw(y.value()[0], "function value");
    g.backward(y);
    analytic = g.has_grad(x.index()) ? g.grad(x) : Tensor<double>(point.shape());
  }
  auto eval = [&](const Tensor<double>& p) {
    Graph<double> g;
    auto x = g.constant(p);
    return finite_or_throw(f(g, x).value()[0], "function value");
  };
  double worst = 0.0;
  Tensor<double> probe = point;
  for (std::int64_t i = 0; i < point.numel(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + epsilon;
    const double up = eval(probe);
    probe[i] = orig - epsilon;
    const double down = eval(probe);
    probe[i] = orig;
    const double numeric = (up - down) / (2.0 * epsilon);
    worst = std::max(worst, relative_error(finite_or_throw(analytic[i], "gradient"), numeric));
  }
  return worst;
}

double grad_check_parameters(const std::function<Var<double>(Graph<double>&)>& loss,
                             std::span<Parameter<double>* const> params, double epsilon,
                             std::int64_t coords_per_param, Rng* rng) {
  if (coords_per_param > 0 && rng == nullptr)
    throw InvalidInput("grad_check_parameters: coordinate sampling needs an Rng");
  for (auto* p : params) p->zero_grad();
  {
    Graph<double> g;
    auto y = loss(g);
    finite_or_throw(y.value()[0], "loss");
    g.backward(y);
  }
  auto eval = [&] {
    Graph<double> g;
    return finite_or_throw(loss(g).value()[0], "loss");
  };
  double worst = 0.0;
  for (auto* p : params) {
    const Tensor<double> analytic = p->grad;
    std::vector<std::int64_t> coords;
    if (coords_per_param > 0 && coords_per_param < p->value.numel()) {
      for (std::int64_t k = 0; k < coords_per_param; ++k) coords.push_back(rng->uniform_int(0, p->value.numel() - 1));
    } else {
      for (std::int64_t k = 0; k < p->value.numel(); ++k) coords.push_back(k);
    }
    for (auto i : coords) {
      const double orig = p->value[i];
      p->value[i] = orig + epsilon;
      const double up = eval();
      p->value[i] = orig - epsilon;
      const double down = eval();
      p->value[i] = orig;
      const double numeric = (up - down) / (2.0 * epsilon);
      worst = std::max(worst, relative_error(finite_or_throw(analytic[i], "gradient"), numeric));
    }
  }
  return worst;
}

}  // namespace tivgan::nn
