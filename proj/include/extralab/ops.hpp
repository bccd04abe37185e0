// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "extralab/rng.hpp"
#include "extralab/tensor.hpp"

// Differentiable ops. Every function checks shapes up front and throws
// ShapeError naming the op and the offending shapes. Results record a
// backward rule when a tape is active and any input requires a gradient.
namespace extralab::ops {

// a[..., K] x b[K, N] -> [..., N].
template <class T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b);

// Elementwise; b may equal a's shape or be a trailing suffix of it
// (broadcast over the leading axes).
template <class T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <class T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <class T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <class T>
BasicTensor<T> scale(const BasicTensor<T>& a, T factor);

template <class T>
BasicTensor<T> sum(const BasicTensor<T>& a);
template <class T>
BasicTensor<T> mean(const BasicTensor<T>& a);

template <class T>
BasicTensor<T> relu(const BasicTensor<T>& a);
template <class T>
BasicTensor<T> tanh(const BasicTensor<T>& a);
template <class T>
BasicTensor<T> sigmoid(const BasicTensor<T>& a);
template <class T>
BasicTensor<T> softmax(const BasicTensor<T>& a, std::int64_t axis = -1);

// Normalizes over the last axis, then applies gamma/beta of that width.
template <class T>
BasicTensor<T> layer_norm(const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                          const BasicTensor<T>& beta, T eps = T(1e-5));

// Inverted dropout: kept elements are scaled by 1/(1-rate). Identity when
// training is false or rate is zero.
template <class T>
BasicTensor<T> dropout(const BasicTensor<T>& x, T rate, bool training, Rng& rng);

// weight[V, D] gathered at ids -> ids_shape + [D].
template <class T>
BasicTensor<T> embedding(const BasicTensor<T>& weight, std::span<const std::int32_t> ids,
                         const Shape& ids_shape);

template <class T>
BasicTensor<T> concat(const std::vector<BasicTensor<T>>& parts, std::int64_t axis);
template <class T>
BasicTensor<T> slice(const BasicTensor<T>& x, std::int64_t axis, std::int64_t start, std::int64_t length);
// Swaps the last two axes.
template <class T>
BasicTensor<T> transpose(const BasicTensor<T>& x);
template <class T>
BasicTensor<T> reshape(const BasicTensor<T>& x, Shape shape);

// Row r of the result (a row is everything below axis 0) comes from a when
// take_a[r] is nonzero, else from b.
template <class T>
BasicTensor<T> where_rows(std::span<const std::uint8_t> take_a, const BasicTensor<T>& a,
                          const BasicTensor<T>& b);

struct AttentionMask {
  // [batch, key_len], nonzero marks a padding key that must not be attended.
  std::span<const std::uint8_t> key_padding;
  // Query i may only attend keys j <= i.
  bool causal = false;
};

// Multi-head scaled dot-product attention over already-projected inputs:
// q[B, Tq, D], k and v [B, Tk, D], D split into n_heads contiguous chunks.
// Masked scores are set to -inf before the softmax; a query row with every
// key masked produces zeros.
template <class T>
BasicTensor<T> scaled_dot_product_attention(const BasicTensor<T>& q, const BasicTensor<T>& k,
                                            const BasicTensor<T>& v, int n_heads,
                                            const AttentionMask& mask = {});

// logits[..., C] flattened to [N, C]; targets has N entries. Mean of
// -log softmax at the target over positions whose target != ignore_index.
// When every position is ignored the loss is 0 and no gradient flows.
template <class T>
BasicTensor<T> cross_entropy(const BasicTensor<T>& logits, std::span<const std::int32_t> targets,
                             std::int32_t ignore_index);

}  // namespace extralab::ops
