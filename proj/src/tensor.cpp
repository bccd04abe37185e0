// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#include "extralab/tensor.hpp"

#include <sstream>

namespace extralab {

std::int64_t numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ']';
  return os.str();
}

template <class T>
BasicTensor<T> BasicTensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <class T>
BasicTensor<T> BasicTensor<T>::full(Shape shape, T value, bool requires_grad) {
  for (auto d : shape) {
    if (d < 0) throw ShapeError("tensor", "negative dimension in " + shape_to_string(shape));
  }
  auto n = static_cast<std::size_t>(extralab::numel(shape));
  return from(std::move(shape), std::vector<T>(n, value), requires_grad);
}

template <class T>
BasicTensor<T> BasicTensor<T>::from(Shape shape, std::vector<T> values, bool requires_grad) {
  if (extralab::numel(shape) != static_cast<std::int64_t>(values.size())) {
    throw ShapeError("tensor", "shape " + shape_to_string(shape) + " does not hold " +
                                   std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return BasicTensor(std::move(node));
}

template <class T>
std::int64_t BasicTensor<T>::dim(std::int64_t axis) const {
  const auto r = rank();
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) {
    throw ShapeError("dim", "axis " + std::to_string(axis) + " out of range for " + shape_to_string(shape()));
  }
  return node_->shape[static_cast<std::size_t>(axis)];
}

template <class T>
T BasicTensor<T>::item() const {
  if (node_->value.size() != 1) throw ShapeError("item", "tensor of shape " + shape_to_string(shape()) + " is not a scalar");
  return node_->value[0];
}

template <class T>
void BasicTensor<T>::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template <class T>
BasicTensor<T> BasicTensor<T>::detach() const {
  return from(node_->shape, node_->value, false);
}

template <class T>
BasicTape<T>*& BasicTape<T>::active_slot() {
  thread_local BasicTape<T>* slot = nullptr;
  return slot;
}

template <class T>
BasicTape<T>* BasicTape<T>::active() {
  return active_slot();
}

template <class T>
void BasicTape<T>::backward(const BasicTensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar, got shape " +
                                (loss.defined() ? shape_to_string(loss.shape()) : std::string("<undefined>")));
  }
  auto* root = loss.node();
  if (!root->requires_grad) return;
  root->grad_buffer()[0] += T(1);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    auto& node = **it;
    if (node.backward && node.grad.size() == node.value.size() && !node.value.empty()) node.backward(node);
  }
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template class BasicTape<float>;
template class BasicTape<double>;

}  // namespace extralab
