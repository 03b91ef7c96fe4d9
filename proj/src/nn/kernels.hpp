// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>

#include "tivgan/errors.hpp"
#include "tivgan/nn/autodiff.hpp"

namespace tivgan::nn::detail {

template <typename S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MatMap = Eigen::Map<RowMat<S>>;
template <typename S>
using ConstMatMap = Eigen::Map<const RowMat<S>>;

template <typename S>
MatMap<S> as_matrix(S* data, std::int64_t rows, std::int64_t cols) {
  return MatMap<S>(data, rows, cols);
}

template <typename S>
ConstMatMap<S> as_matrix(const S* data, std::int64_t rows, std::int64_t cols) {
  return ConstMatMap<S>(data, rows, cols);
}

template <typename S>
void accumulate(Tensor<S>& dst, const Tensor<S>& src) {
  S* d = dst.data();
  const S* s = src.data();
  const std::int64_t n = dst.numel();
  for (std::int64_t i = 0; i < n; ++i) d[i] += s[i];
}

[[noreturn]] inline void shape_fail(const char* op, const std::string& what) {
  throw ShapeError(std::string(op) + ": " + what);
}

}  // namespace tivgan::nn::detail
