// SPDX-License-Identifier: Apache-2.0
#include "tivgan/nn/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "tivgan/errors.hpp"

namespace tivgan::nn {

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    if (d <= 0) throw ShapeError("tensor: non-positive dimension in " + shape_string(shape));
    n *= d;
  }
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <typename S>
Tensor<S>::Tensor(Shape shape, S fill)
    : shape_(std::move(shape)), data_(static_cast<std::size_t>(shape_numel(shape_)), fill) {}

template <typename S>
Tensor<S>::Tensor(Shape shape, std::vector<S> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != static_cast<std::int64_t>(data_.size()))
    throw ShapeError("tensor: data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_string(shape_));
}

template <typename S>
std::int64_t Tensor<S>::dim(std::size_t axis) const {
  if (axis >= shape_.size())
    throw ShapeError("tensor: axis " + std::to_string(axis) + " out of range for " + shape_string(shape_));
  return shape_[axis];
}

template <typename S>
void Tensor<S>::fill(S v) {
  std::fill(data_.begin(), data_.end(), v);
}

template <typename S>
void Tensor<S>::reshape(Shape shape) {
  if (shape_numel(shape) != numel())
    throw ShapeError("reshape: " + shape_string(shape_) + " -> " + shape_string(shape));
  shape_ = std::move(shape);
}

template <typename S>
Tensor<S> Tensor<S>::reshaped(Shape shape) const {
  Tensor out = *this;
  out.reshape(std::move(shape));
  return out;
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace tivgan::nn
