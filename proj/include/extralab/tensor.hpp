// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

// Dense tensors with reverse-mode differentiation.
//
// A tensor is a shared handle to a node holding its shape, values and (once
// touched by backward) a gradient buffer of the same size. Ops executed while
// a tape is active on the current thread record their result node together
// with a backward rule. Because nodes are recorded in creation order, the
// tape order is a topological order of the graph, and Tape::backward visits
// every recorded node exactly once, in reverse.
//
// Leaf tensors created with requires_grad are parameters; their gradients
// accumulate across backward calls until zero_grad().

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace extralab {

using Shape = std::vector<std::int64_t>;

std::int64_t numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  ShapeError(const std::string& op, const std::string& detail)
      : std::invalid_argument(op + ": " + detail), op_(op) {}
  const std::string& op() const { return op_; }

 private:
  std::string op_;
};

template <class T>
struct TensorNode {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until gradient flows here
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> inputs;
  std::function<void(TensorNode&)> backward;

  std::vector<T>& grad_buffer() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    return grad;
  }
};

template <class T>
class BasicTensor {
 public:
  using Node = TensorNode<T>;

  BasicTensor() = default;
  explicit BasicTensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static BasicTensor zeros(Shape shape, bool requires_grad = false);
  static BasicTensor full(Shape shape, T value, bool requires_grad = false);
  static BasicTensor from(Shape shape, std::vector<T> values, bool requires_grad = false);
  static BasicTensor scalar(T value) { return from({}, {value}); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::int64_t rank() const { return static_cast<std::int64_t>(node_->shape.size()); }
  // Negative axes count from the end.
  std::int64_t dim(std::int64_t axis) const;
  std::int64_t numel() const { return static_cast<std::int64_t>(node_->value.size()); }

  std::span<T> values() { return node_->value; }
  std::span<const T> values() const { return node_->value; }
  T item() const;
  T at(std::int64_t flat_index) const { return node_->value[static_cast<std::size_t>(flat_index)]; }

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return node_->grad.size() == node_->value.size() && !node_->value.empty(); }
  // Allocates a zero gradient on first access.
  std::span<T> grad() { return node_->grad_buffer(); }
  std::span<const T> grad() const { return node_->grad_buffer(); }
  void zero_grad();

  // Copies the values into a fresh leaf with no history.
  BasicTensor detach() const;

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

template <class T>
class BasicTape {
 public:
  BasicTape() = default;
  BasicTape(const BasicTape&) = delete;
  BasicTape& operator=(const BasicTape&) = delete;

  void record(std::shared_ptr<TensorNode<T>> node) { nodes_.push_back(std::move(node)); }
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  // Seeds d(loss)/d(loss) = 1 and replays recorded backward rules in reverse.
  // Throws std::invalid_argument if loss is not a scalar.
  void backward(const BasicTensor<T>& loss);

  // The tape recording on this thread, or nullptr.
  static BasicTape* active();

 private:
  template <class>
  friend class TapeScope;
  template <class>
  friend class NoGradScope;
  static BasicTape*& active_slot();
  std::vector<std::shared_ptr<TensorNode<T>>> nodes_;
};

// Activates a tape on the current thread for the scope's lifetime.
template <class T>
class TapeScope {
 public:
  explicit TapeScope(BasicTape<T>& tape) : previous_(BasicTape<T>::active_slot()) {
    BasicTape<T>::active_slot() = &tape;
  }
  ~TapeScope() { BasicTape<T>::active_slot() = previous_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  BasicTape<T>* previous_;
};

// Suspends recording (inference).
template <class T>
class NoGradScope {
 public:
  NoGradScope() : previous_(BasicTape<T>::active_slot()) { BasicTape<T>::active_slot() = nullptr; }
  ~NoGradScope() { BasicTape<T>::active_slot() = previous_; }
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  BasicTape<T>* previous_;
};

using Tensor = BasicTensor<float>;
using Tape = BasicTape<float>;
using Tensor64 = BasicTensor<double>;
using Tape64 = BasicTape<double>;

extern template class BasicTensor<float>;
extern template class BasicTensor<double>;
extern template class BasicTape<float>;
extern template class BasicTape<double>;

}  // namespace extralab
