// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#include "extralab/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>

namespace extralab::ops {
namespace {

template <class T>
using Node = TensorNode<T>;
template <class T>
using NodePtr = std::shared_ptr<Node<T>>;
template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
BasicTensor<T> make(Shape shape, std::vector<T> values) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  return BasicTensor<T>(std::move(node));
}

// Returns the active tape if the result of an op over `inputs` must be
// recorded.
template <class T>
BasicTape<T>* recording(std::initializer_list<const BasicTensor<T>*> inputs) {
  auto* tape = BasicTape<T>::active();
  if (!tape) return nullptr;
  for (const auto* t : inputs) {
    if (t->requires_grad()) return tape;
  }
  return nullptr;
}

template <class T, class Fn>
void attach(BasicTensor<T>& out, BasicTape<T>* tape, std::vector<NodePtr<T>> inputs, Fn&& backward) {
  auto* node = out.node();
  node->requires_grad = true;
  node->inputs = std::move(inputs);
  node->backward = std::forward<Fn>(backward);
  tape->record(out.node_ptr());
}

// Gradient buffer of input i, or nullptr when it takes no gradient.
template <class T>
T* input_grad(Node<T>& self, std::size_t i) {
  auto& in = *self.inputs[i];
  return in.requires_grad ? in.grad_buffer().data() : nullptr;
}

std::int64_t normalize_axis(const char* op, std::int64_t axis, std::int64_t rank, const Shape& shape) {
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) {
    throw ShapeError(op, "axis out of range for shape " + shape_to_string(shape));
  }
  return axis;
}

struct AxisSplit {
  std::int64_t outer = 1;
  std::int64_t dim = 1;
  std::int64_t inner = 1;
};

AxisSplit split_at(const Shape& shape, std::int64_t axis) {
  AxisSplit s;
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(shape.size()); ++i) {
    if (i < axis) s.outer *= shape[i];
    else if (i == axis) s.dim = shape[i];
    else s.inner *= shape[i];
  }
  return s;
}

bool is_suffix(const Shape& full, const Shape& tail) {
  if (tail.size() > full.size()) return false;
  return std::equal(tail.rbegin(), tail.rend(), full.rbegin());
}

template <class T>
std::int64_t broadcast_inner(const char* op, const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (!is_suffix(a.shape(), b.shape()) || b.numel() == 0) {
    throw ShapeError(op, "cannot broadcast " + shape_to_string(b.shape()) + " onto " + shape_to_string(a.shape()));
  }
  return b.numel();
}

// Vectorized reductions; Eigen fixes the summation order for a given length,
// so results stay deterministic.
// Reductions accumulate in a fixed number of interleaved lanes, folded by a
// fixed pairwise tree, so the summation order (and therefore the rounding)
// depends only on n, never on the buffer's alignment. Results are
// bit-identical across repeated calls.
inline constexpr int kLanes = 16;

template <class T>
using LaneBlock = Eigen::Map<const Eigen::Array<T, kLanes, 1>, Eigen::Unaligned>;

template <class T>
T fold_lanes(const Eigen::Array<T, kLanes, 1>& acc) {
  const Eigen::Array<T, 8, 1> a8 = acc.template head<8>() + acc.template tail<8>();
  const Eigen::Array<T, 4, 1> a4 = a8.template head<4>() + a8.template tail<4>();
  const Eigen::Array<T, 2, 1> a2 = a4.template head<2>() + a4.template tail<2>();
  return a2[0] + a2[1];
}

template <class T>
T sum_of(const T* p, std::int64_t n) {
  Eigen::Array<T, kLanes, 1> acc = Eigen::Array<T, kLanes, 1>::Zero();
  std::int64_t i = 0;
  for (; i + kLanes <= n; i += kLanes) acc += LaneBlock<T>(p + i);
  T s = fold_lanes(acc);
  for (; i < n; ++i) s += p[i];
  return s;
}

template <class T>
T dot_of(const T* a, const T* b, std::int64_t n) {
  Eigen::Array<T, kLanes, 1> acc = Eigen::Array<T, kLanes, 1>::Zero();
  std::int64_t i = 0;
  for (; i + kLanes <= n; i += kLanes) acc += LaneBlock<T>(a + i) * LaneBlock<T>(b + i);
  T s = fold_lanes(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

// Calls fn(base) for the start of each contiguous row of length `inner`, so
// suffix broadcasting never needs a per-element modulo.
template <class Fn>
void for_each_row(std::size_t total, std::size_t inner, Fn&& fn) {
  for (std::size_t base = 0; base < total; base += inner) fn(base);
}

}  // namespace

template <class T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.rank() < 1 || b.rank() != 2 || a.dim(-1) != b.dim(0)) {
    throw ShapeError("matmul", "incompatible shapes " + shape_to_string(a.shape()) + " x " + shape_to_string(b.shape()));
  }
  const auto k = b.dim(0);
  const auto n = b.dim(1);
  const auto m = k == 0 ? 0 : a.numel() / k;
  Shape shape = a.shape();
  shape.back() = n;
  std::vector<T> values(static_cast<std::size_t>(m * n));
  {
    Eigen::Map<const RowMat<T>> am(a.values().data(), m, k);
    Eigen::Map<const RowMat<T>> bm(b.values().data(), k, n);
    Eigen::Map<RowMat<T>> cm(values.data(), m, n);
    cm.noalias() = am * bm;
  }
  auto out = make<T>(std::move(shape), std::move(values));
  if (auto* tape = recording<T>({&a, &b})) {
    attach(out, tape, {a.node_ptr(), b.node_ptr()}, [m, k, n](Node<T>& self) {
      Eigen::Map<const RowMat<T>> dc(self.grad.data(), m, n);
      if (T* ga = input_grad(self, 0)) {
        Eigen::Map<const RowMat<T>> bm(self.inputs[1]->value.data(), k, n);
        Eigen::Map<RowMat<T>> da(ga, m, k);
        da.noalias() += dc * bm.transpose();
      }
      if (T* gb = input_grad(self, 1)) {
        Eigen::Map<const RowMat<T>> am(self.inputs[0]->value.data(), m, k);
        Eigen::Map<RowMat<T>> db(gb, k, n);
        db.noalias() += am.transpose() * dc;
      }
    });
  }
  return out;
}

template <class T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  const auto inner = broadcast_inner("add", a, b);
  std::vector<T> values(a.values().begin(), a.values().end());
  const auto bv = b.values();
  const auto n = static_cast<std::size_t>(inner);
  for_each_row(values.size(), n, [&](std::size_t base) {
    T* row = values.data() + base;
    for (std::size_t j = 0; j < n; ++j) row[j] += bv[j];
  });
  auto out = make<T>(a.shape(), std::move(values));
  if (auto* tape = recording<T>({&a, &b})) {
    attach(out, tape, {a.node_ptr(), b.node_ptr()}, [inner](Node<T>& self) {
      const auto& g = self.grad;
      if (T* ga = input_grad(self, 0)) {
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (T* gb = input_grad(self, 1)) {
        const auto n = static_cast<std::size_t>(inner);
        for_each_row(g.size(), n, [&](std::size_t base) {
          const T* row = g.data() + base;
          for (std::size_t j = 0; j < n; ++j) gb[j] += row[j];
        });
      }
    });
  }
  return out;
}

template <class T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  const auto inner = broadcast_inner("sub", a, b);
  std::vector<T> values(a.values().begin(), a.values().end());
  const auto bv = b.values();
  const auto n = static_cast<std::size_t>(inner);
  for_each_row(values.size(), n, [&](std::size_t base) {
    T* row = values.data() + base;
    for (std::size_t j = 0; j < n; ++j) row[j] -= bv[j];
  });
  auto out = make<T>(a.shape(), std::move(values));
  if (auto* tape = recording<T>({&a, &b})) {
    attach(out, tape, {a.node_ptr(), b.node_ptr()}, [inner](Node<T>& self) {
      const auto& g = self.grad;
      if (T* ga = input_grad(self, 0)) {
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (T* gb = input_grad(self, 1)) {
        const auto n = static_cast<std::size_t>(inner);
        for_each_row(g.size(), n, [&](std::size_t base) {
          const T* row = g.data() + base;
          for (std::size_t j = 0; j < n; ++j) gb[j] -= row[j];
        });
      }
    });
  }
  return out;
}

template <class T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  const auto inner = static_cast<std::size_t>(broadcast_inner("mul", a, b));
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<T> values(av.size());
  for_each_row(values.size(), inner, [&](std::size_t base) {
    for (std::size_t j = 0; j < inner; ++j) values[base + j] = av[base + j] * bv[j];
  });
  auto out = make<T>(a.shape(), std::move(values));
  if (auto* tape = recording<T>({&a, &b})) {
    attach(out, tape, {a.node_ptr(), b.node_ptr()}, [inner](Node<T>& self) {
      const auto& g = self.grad;
      const auto& x = self.inputs[0]->value;
      const auto& y = self.inputs[1]->value;
      if (T* ga = input_grad(self, 0)) {
        for_each_row(g.size(), inner, [&](std::size_t base) {
          for (std::size_t j = 0; j < inner; ++j) ga[base + j] += g[base + j] * y[j];
        });
      }
      if (T* gb = input_grad(self, 1)) {
        for_each_row(g.size(), inner, [&](std::size_t base) {
          for (std::size_t j = 0; j < inner; ++j) gb[j] += g[base + j] * x[base + j];
        });
      }
    });
  }
  return out;
}

template <class T>
BasicTensor<T> scale(const BasicTensor<T>& a, T factor) {
  std::vector<T> values(a.values().begin(), a.values().end());
  for (auto& v : values) v *= factor;
  auto out = make<T>(a.shape(), std::move(values));
  if (auto* tape = recording<T>({&a})) {
    attach(out, tape, {a.node_ptr()}, [factor](Node<T>& self) {
      T* ga = input_grad(self, 0);
      for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += factor * self.grad[i];
    });
  }
  return out;
}

template <class T>
BasicTensor<T> sum(const BasicTensor<T>& a) {
  T acc = 0;
  for (T v : a.values()) acc += v;
  auto out = make<T>({}, {acc});
  if (auto* tape = recording<T>({&a})) {
    attach(out, tape, {a.node_ptr()}, [](Node<T>& self) {
      auto& g = self.inputs[0]->grad_buffer();
      for (auto& v : g) v += self.grad[0];
    });
  }
  return out;
}

template <class T>
BasicTensor<T> mean(const BasicTensor<T>& a) {
  if (a.numel() == 0) throw ShapeError("mean", "empty tensor");
  return scale(sum(a), T(1) / static_cast<T>(a.numel()));
}

namespace {

// Elementwise unary op whose derivative is expressed through the output.
template <class T, class Fwd, class DerivFromOut>
BasicTensor<T> unary(const BasicTensor<T>& a, Fwd fwd, DerivFromOut deriv) {
  std::vector<T> values(a.values().begin(), a.values().end());
  for (auto& v : values) v = fwd(v);
  auto out = make<T>(a.shape(), std::move(values));
  if (auto* tape = recording<T>({&a})) {
    attach(out, tape, {a.node_ptr()}, [deriv](Node<T>& self) {
      T* ga = input_grad(self, 0);
      for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i] * deriv(self.value[i]);
    });
  }
  return out;
}

}  // namespace

template <class T>
BasicTensor<T> relu(const BasicTensor<T>& a) {
  return unary(a, [](T x) { return x > T(0) ? x : T(0); }, [](T y) { return y > T(0) ? T(1) : T(0); });
}

template <class T>
BasicTensor<T> tanh(const BasicTensor<T>& a) {
  return unary(a, [](T x) { return std::tanh(x); }, [](T y) { return T(1) - y * y; });
}

template <class T>
BasicTensor<T> sigmoid(const BasicTensor<T>& a) {
  return unary(
      a, [](T x) { return x >= T(0) ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x)); },
      [](T y) { return y * (T(1) - y); });
}

template <class T>
BasicTensor<T> softmax(const BasicTensor<T>& a, std::int64_t axis) {
  axis = normalize_axis("softmax", axis, a.rank(), a.shape());
  const auto s = split_at(a.shape(), axis);
  const auto av = a.values();
  std::vector<T> values(av.size());
  for (std::int64_t o = 0; o < s.outer; ++o) {
    for (std::int64_t in = 0; in < s.inner; ++in) {
      const std::int64_t base = o * s.dim * s.inner + in;
      T mx = -std::numeric_limits<T>::infinity();
      for (std::int64_t d = 0; d < s.dim; ++d) mx = std::max(mx, av[base + d * s.inner]);
      T total = 0;
      for (std::int64_t d = 0; d < s.dim; ++d) {
        T e = std::exp(av[base + d * s.inner] - mx);
        values[base + d * s.inner] = e;
        total += e;
      }
      for (std::int64_t d = 0; d < s.dim; ++d) values[base + d * s.inner] /= total;
    }
  }
  auto out = make<T>(a.shape(), std::move(values));
  if (auto* tape = recording<T>({&a})) {
    attach(out, tape, {a.node_ptr()}, [s](Node<T>& self) {
      T* ga = input_grad(self, 0);
      const auto& y = self.value;
      const auto& g = self.grad;
      for (std::int64_t o = 0; o < s.outer; ++o) {
        for (std::int64_t in = 0; in < s.inner; ++in) {
          const std::int64_t base = o * s.dim * s.inner + in;
          T dot = 0;
          for (std::int64_t d = 0; d < s.dim; ++d) dot += g[base + d * s.inner] * y[base + d * s.inner];
          for (std::int64_t d = 0; d < s.dim; ++d) {
            const auto idx = base + d * s.inner;
            ga[idx] += y[idx] * (g[idx] - dot);
          }
        }
      }
    });
  }
  return out;
}

template <class T>
BasicTensor<T> layer_norm(const BasicTensor<T>& x, const BasicTensor<T>& gamma, const BasicTensor<T>& beta, T eps) {
  if (x.rank() < 1 || gamma.rank() != 1 || beta.rank() != 1 || gamma.dim(0) != x.dim(-1) ||
      beta.dim(0) != x.dim(-1)) {
    throw ShapeError("layer_norm", "x " + shape_to_string(x.shape()) + " with gamma " +
                                       shape_to_string(gamma.shape()) + " and beta " + shape_to_string(beta.shape()));
  }
  const auto width = x.dim(-1);
  const auto rows = width == 0 ? 0 : x.numel() / width;
  const auto xv = x.values();
  const auto gv = gamma.values();
  const auto bv = beta.values();
  std::vector<T> values(xv.size());
  std::vector<T> xhat(xv.size());
  std::vector<T> rstd(static_cast<std::size_t>(rows));
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* row = xv.data() + r * width;
    const T mu = sum_of(row, width) / static_cast<T>(width);
    T* xh = xhat.data() + r * width;
    for (std::int64_t i = 0; i < width; ++i) xh[i] = row[i] - mu;
    const T var = dot_of(xh, xh, width) / static_cast<T>(width);
    const T inv = T(1) / std::sqrt(var + eps);
    rstd[static_cast<std::size_t>(r)] = inv;
    T* out_row = values.data() + r * width;
    for (std::int64_t i = 0; i < width; ++i) {
      xh[i] *= inv;
      out_row[i] = xh[i] * gv[i] + bv[i];
    }
  }
  auto out = make<T>(x.shape(), std::move(values));
  if (auto* tape = recording<T>({&x, &gamma, &beta})) {
    attach(out, tape, {x.node_ptr(), gamma.node_ptr(), beta.node_ptr()},
           [xhat = std::move(xhat), rstd = std::move(rstd), rows, width](Node<T>& self) {
             const auto& g = self.grad;
             const auto& gam = self.inputs[1]->value;
             T* gx = input_grad(self, 0);
             T* ggamma = input_grad(self, 1);
             T* gbeta = input_grad(self, 2);
             std::vector<T> d(static_cast<std::size_t>(width));
             for (std::int64_t r = 0; r < rows; ++r) {
               const auto off = r * width;
               if (gx) {
                 for (std::int64_t i = 0; i < width; ++i) d[static_cast<std::size_t>(i)] = g[off + i] * gam[i];
                 const T mean_d = sum_of(d.data(), width) / static_cast<T>(width);
                 const T mean_dx = dot_of(d.data(), xhat.data() + off, width) / static_cast<T>(width);
                 const T inv = rstd[static_cast<std::size_t>(r)];
                 for (std::int64_t i = 0; i < width; ++i) {
                   gx[off + i] += inv * (d[static_cast<std::size_t>(i)] - mean_d - xhat[off + i] * mean_dx);
                 }
               }
               for (std::int64_t i = 0; i < width; ++i) {
                 if (ggamma) ggamma[i] += g[off + i] * xhat[off + i];
                 if (gbeta) gbeta[i] += g[off + i];
               }
             }
           });
  }
  return out;
}

template <class T>
BasicTensor<T> dropout(const BasicTensor<T>& x, T rate, bool training, Rng& rng) {
  if (!(rate >= T(0) && rate < T(1))) throw std::invalid_argument("dropout: rate must lie in [0, 1)");
  if (!training || rate == T(0)) return x;
  const T keep_scale = T(1) / (T(1) - rate);
  const auto xv = x.values();
  std::vector<T> mask(xv.size());
  std::vector<T> values(xv.size());
  // Each 64-bit draw yields two 32-bit uniforms; an element is dropped when
  // its uniform falls below rate * 2^32.
  const auto threshold = static_cast<std::uint64_t>(static_cast<double>(rate) * 4294967296.0);
  for (std::size_t i = 0; i < xv.size(); i += 2) {
    const std::uint64_t u = rng.next_u64();
    mask[i] = (u & 0xffffffffu) < threshold ? T(0) : keep_scale;
    if (i + 1 < xv.size()) mask[i + 1] = (u >> 32) < threshold ? T(0) : keep_scale;
  }
  for (std::size_t i = 0; i < xv.size(); ++i) values[i] = xv[i] * mask[i];
  auto out = make<T>(x.shape(), std::move(values));
  if (auto* tape = recording<T>({&x})) {
    attach(out, tape, {x.node_ptr()}, [mask = std::move(mask)](Node<T>& self) {
      T* gx = input_grad(self, 0);
      for (std::size_t i = 0; i < mask.size(); ++i) gx[i] += self.grad[i] * mask[i];
    });
  }
  return out;
}

template <class T>
BasicTensor<T> embedding(const BasicTensor<T>& weight, std::span<const std::int32_t> ids, const Shape& ids_shape) {
  if (weight.rank() != 2 || numel(ids_shape) != static_cast<std::int64_t>(ids.size())) {
    throw ShapeError("embedding", "weight " + shape_to_string(weight.shape()) + " with ids shape " +
                                      shape_to_string(ids_shape) + " holding " + std::to_string(ids.size()) + " ids");
  }
  const auto vocab = weight.dim(0);
  const auto width = weight.dim(1);
  const auto wv = weight.values();
  std::vector<T> values(ids.size() * static_cast<std::size_t>(width));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= vocab) {
      throw ShapeError("embedding", "id " + std::to_string(ids[i]) + " outside vocabulary of " + std::to_string(vocab));
    }
    std::copy_n(wv.data() + ids[i] * width, width, values.data() + static_cast<std::int64_t>(i) * width);
  }
  Shape shape = ids_shape;
  shape.push_back(width);
  auto out = make<T>(std::move(shape), std::move(values));
  if (auto* tape = recording<T>({&weight})) {
    std::vector<std::int32_t> saved(ids.begin(), ids.end());
    attach(out, tape, {weight.node_ptr()}, [saved = std::move(saved), width](Node<T>& self) {
      T* gw = input_grad(self, 0);
      for (std::size_t i = 0; i < saved.size(); ++i) {
        const T* src = self.grad.data() + static_cast<std::int64_t>(i) * width;
        T* dst = gw + saved[i] * width;
        for (std::int64_t d = 0; d < width; ++d) dst[d] += src[d];
      }
    });
  }
  return out;
}

template <class T>
BasicTensor<T> concat(const std::vector<BasicTensor<T>>& parts, std::int64_t axis) {
  if (parts.empty()) throw ShapeError("concat", "no inputs");
  const auto& first = parts.front().shape();
  axis = normalize_axis("concat", axis, static_cast<std::int64_t>(first.size()), first);
  std::vector<std::int64_t> widths;
  Shape shape = first;
  shape[axis] = 0;
  for (const auto& p : parts) {
    const auto& ps = p.shape();
    bool ok = ps.size() == first.size();
    for (std::size_t i = 0; ok && i < ps.size(); ++i) {
      if (static_cast<std::int64_t>(i) != axis && ps[i] != first[i]) ok = false;
    }
    if (!ok) throw ShapeError("concat", "shape " + shape_to_string(ps) + " incompatible with " + shape_to_string(first));
    shape[axis] += ps[axis];
  }
  const auto s = split_at(shape, axis);
  std::vector<T> values(static_cast<std::size_t>(numel(shape)));
  std::vector<std::int64_t> spans;
  std::int64_t offset = 0;
  for (const auto& p : parts) {
    const auto chunk = p.shape()[axis] * s.inner;
    spans.push_back(chunk);
    const auto pv = p.values();
    for (std::int64_t o = 0; o < s.outer; ++o) {
      std::copy_n(pv.data() + o * chunk, chunk, values.data() + o * s.dim * s.inner + offset);
    }
    offset += chunk;
  }
  auto out = make<T>(std::move(shape), std::move(values));
  auto* tape = BasicTape<T>::active();
  bool any = false;
  for (const auto& p : parts) any = any || p.requires_grad();
  if (tape && any) {
    std::vector<NodePtr<T>> inputs;
    for (const auto& p : parts) inputs.push_back(p.node_ptr());
    attach(out, tape, std::move(inputs), [spans = std::move(spans), s](Node<T>& self) {
      std::int64_t off = 0;
      for (std::size_t i = 0; i < spans.size(); ++i) {
        if (T* gi = input_grad(self, i)) {
          for (std::int64_t o = 0; o < s.outer; ++o) {
            const T* src = self.grad.data() + o * s.dim * s.inner + off;
            T* dst = gi + o * spans[i];
            for (std::int64_t j = 0; j < spans[i]; ++j) dst[j] += src[j];
          }
        }
        off += spans[i];
      }
    });
  }
  return out;
}

template <class T>
BasicTensor<T> slice(const BasicTensor<T>& x, std::int64_t axis, std::int64_t start, std::int64_t length) {
  axis = normalize_axis("slice", axis, x.rank(), x.shape());
  const auto s = split_at(x.shape(), axis);
  if (start < 0 || length < 0 || start + length > s.dim) {
    throw ShapeError("slice", "range [" + std::to_string(start) + ", " + std::to_string(start + length) +
                                  ") outside axis of " + shape_to_string(x.shape()));
  }
  Shape shape = x.shape();
  shape[axis] = length;
  const auto chunk = length * s.inner;
  const auto xv = x.values();
  std::vector<T> values(static_cast<std::size_t>(s.outer * chunk));
  for (std::int64_t o = 0; o < s.outer; ++o) {
    std::copy_n(xv.data() + o * s.dim * s.inner + start * s.inner, chunk, values.data() + o * chunk);
  }
  auto out = make<T>(std::move(shape), std::move(values));
  if (auto* tape = recording<T>({&x})) {
    attach(out, tape, {x.node_ptr()}, [s, chunk, start](Node<T>& self) {
      T* gx = input_grad(self, 0);
      for (std::int64_t o = 0; o < s.outer; ++o) {
        T* dst = gx + o * s.dim * s.inner + start * s.inner;
        const T* src = self.grad.data() + o * chunk;
        for (std::int64_t j = 0; j < chunk; ++j) dst[j] += src[j];
      }
    });
  }
  return out;
}

template <class T>
BasicTensor<T> transpose(const BasicTensor<T>& x) {
  if (x.rank() < 2) throw ShapeError("transpose", "needs rank >= 2, got " + shape_to_string(x.shape()));
  const auto rows = x.dim(-2);
  const auto cols = x.dim(-1);
  const auto batch = rows * cols == 0 ? 0 : x.numel() / (rows * cols);
  Shape shape = x.shape();
  std::swap(shape[shape.size() - 1], shape[shape.size() - 2]);
  const auto xv = x.values();
  std::vector<T> values(xv.size());
  for (std::int64_t b = 0; b < batch; ++b) {
    for (std::int64_t r = 0; r < rows; ++r) {
      for (std::int64_t c = 0; c < cols; ++c) values[b * rows * cols + c * rows + r] = xv[b * rows * cols + r * cols + c];
    }
  }
  auto out = make<T>(std::move(shape), std::move(values));
  if (auto* tape = recording<T>({&x})) {
    attach(out, tape, {x.node_ptr()}, [batch, rows, cols](Node<T>& self) {
      T* gx = input_grad(self, 0);
      for (std::int64_t b = 0; b < batch; ++b) {
        for (std::int64_t r = 0; r < rows; ++r) {
          for (std::int64_t c = 0; c < cols; ++c) {
            gx[b * rows * cols + r * cols + c] += self.grad[b * rows * cols + c * rows + r];
          }
        }
      }
    });
  }
  return out;
}

template <class T>
BasicTensor<T> reshape(const BasicTensor<T>& x, Shape shape) {
  if (numel(shape) != x.numel()) {
    throw ShapeError("reshape", "cannot view " + shape_to_string(x.shape()) + " as " + shape_to_string(shape));
  }
  auto out = make<T>(std::move(shape), std::vector<T>(x.values().begin(), x.values().end()));
  if (auto* tape = recording<T>({&x})) {
    attach(out, tape, {x.node_ptr()}, [](Node<T>& self) {
      T* gx = input_grad(self, 0);
      for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i];
    });
  }
  return out;
}

template <class T>
BasicTensor<T> where_rows(std::span<const std::uint8_t> take_a, const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.shape() != b.shape() || a.rank() < 1 || static_cast<std::int64_t>(take_a.size()) != a.dim(0)) {
    throw ShapeError("where_rows", "a " + shape_to_string(a.shape()) + ", b " + shape_to_string(b.shape()) +
                                       ", mask of " + std::to_string(take_a.size()));
  }
  const auto rows = a.dim(0);
  const auto width = rows == 0 ? 0 : a.numel() / rows;
  std::vector<T> values(static_cast<std::size_t>(a.numel()));
  for (std::int64_t r = 0; r < rows; ++r) {
    const auto& src = take_a[r] ? a : b;
    std::copy_n(src.values().data() + r * width, width, values.data() + r * width);
  }
  auto out = make<T>(a.shape(), std::move(values));
  if (auto* tape = recording<T>({&a, &b})) {
    std::vector<std::uint8_t> mask(take_a.begin(), take_a.end());
    attach(out, tape, {a.node_ptr(), b.node_ptr()}, [mask = std::move(mask), width](Node<T>& self) {
      T* ga = input_grad(self, 0);
      T* gb = input_grad(self, 1);
      for (std::size_t r = 0; r < mask.size(); ++r) {
        T* dst = mask[r] ? ga : gb;
        if (!dst) continue;
        const auto off = static_cast<std::int64_t>(r) * width;
        for (std::int64_t i = 0; i < width; ++i) dst[off + i] += self.grad[off + i];
      }
    });
  }
  return out;
}

template <class T>
BasicTensor<T> scaled_dot_product_attention(const BasicTensor<T>& q, const BasicTensor<T>& k, const BasicTensor<T>& v,
                                            int n_heads, const AttentionMask& mask) {
  const bool ok = q.rank() == 3 && k.rank() == 3 && v.rank() == 3 && k.shape() == v.shape() && q.dim(0) == k.dim(0) &&
                  q.dim(2) == k.dim(2) && n_heads > 0 && q.dim(2) % n_heads == 0;
  if (!ok) {
    throw ShapeError("attention", "q " + shape_to_string(q.shape()) + ", k " + shape_to_string(k.shape()) + ", v " +
                                      shape_to_string(v.shape()) + ", heads " + std::to_string(n_heads));
  }
  const auto batch = q.dim(0);
  const auto tq = q.dim(1);
  const auto tk = k.dim(1);
  const auto width = q.dim(2);
  const auto hd = width / n_heads;
  if (!mask.key_padding.empty() && static_cast<std::int64_t>(mask.key_padding.size()) != batch * tk) {
    throw ShapeError("attention", "key padding mask of " + std::to_string(mask.key_padding.size()) +
                                      " entries for keys " + shape_to_string(k.shape()));
  }
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(hd));
  const auto qv = q.values();
  const auto kv = k.values();
  const auto vv = v.values();
  // probs[b, h, i, j]
  std::vector<T> probs(static_cast<std::size_t>(batch * n_heads * tq * tk), T(0));
  std::vector<T> values(static_cast<std::size_t>(batch * tq * width), T(0));
  std::vector<T> row(static_cast<std::size_t>(tk));
  for (std::int64_t b = 0; b < batch; ++b) {
    for (std::int64_t h = 0; h < n_heads; ++h) {
      for (std::int64_t i = 0; i < tq; ++i) {
        const T* qi = qv.data() + (b * tq + i) * width + h * hd;
        T mx = -std::numeric_limits<T>::infinity();
        for (std::int64_t j = 0; j < tk; ++j) {
          const bool masked = (mask.causal && j > i) || (!mask.key_padding.empty() && mask.key_padding[b * tk + j]);
          if (masked) {
            row[j] = -std::numeric_limits<T>::infinity();
            continue;
          }
          const T* kj = kv.data() + (b * tk + j) * width + h * hd;
          row[j] = dot_of(qi, kj, hd) * inv_sqrt;
          mx = std::max(mx, row[j]);
        }
        if (mx == -std::numeric_limits<T>::infinity()) continue;  // fully masked row stays zero
        T total = 0;
        for (std::int64_t j = 0; j < tk; ++j) {
          row[j] = std::exp(row[j] - mx);
          total += row[j];
        }
        T* p = probs.data() + ((b * n_heads + h) * tq + i) * tk;
        T* o = values.data() + (b * tq + i) * width + h * hd;
        for (std::int64_t j = 0; j < tk; ++j) {
          p[j] = row[j] / total;
          if (p[j] == T(0)) continue;
          const T* vj = vv.data() + (b * tk + j) * width + h * hd;
          for (std::int64_t d = 0; d < hd; ++d) o[d] += p[j] * vj[d];
        }
      }
    }
  }
  auto out = make<T>({batch, tq, width}, std::move(values));
  if (auto* tape = recording<T>({&q, &k, &v})) {
    attach(out, tape, {q.node_ptr(), k.node_ptr(), v.node_ptr()},
           [probs = std::move(probs), batch, tq, tk, width, hd, n_heads, inv_sqrt](Node<T>& self) {
             const auto& qv = self.inputs[0]->value;
             const auto& kv = self.inputs[1]->value;
             const auto& vv = self.inputs[2]->value;
             T* gq = input_grad(self, 0);
             T* gk = input_grad(self, 1);
             T* gv = input_grad(self, 2);
             std::vector<T> dp(static_cast<std::size_t>(tk));
             for (std::int64_t b = 0; b < batch; ++b) {
               for (std::int64_t h = 0; h < n_heads; ++h) {
                 for (std::int64_t i = 0; i < tq; ++i) {
                   const T* p = probs.data() + ((b * n_heads + h) * tq + i) * tk;
                   const T* go = self.grad.data() + (b * tq + i) * width + h * hd;
                   T weighted = 0;
                   for (std::int64_t j = 0; j < tk; ++j) {
                     dp[j] = 0;
                     if (p[j] == T(0)) continue;
                     const T* vj = vv.data() + (b * tk + j) * width + h * hd;
                     dp[j] = dot_of(go, vj, hd);
                     weighted += p[j] * dp[j];
                     if (gv) {
                       T* gvj = gv + (b * tk + j) * width + h * hd;
                       for (std::int64_t d = 0; d < hd; ++d) gvj[d] += p[j] * go[d];
                     }
                   }
                   const T* qi = qv.data() + (b * tq + i) * width + h * hd;
                   T* gqi = gq ? gq + (b * tq + i) * width + h * hd : nullptr;
                   for (std::int64_t j = 0; j < tk; ++j) {
                     if (p[j] == T(0)) continue;
                     const T ds = p[j] * (dp[j] - weighted) * inv_sqrt;
                     const T* kj = kv.data() + (b * tk + j) * width + h * hd;
                     if (gqi) {
                       for (std::int64_t d = 0; d < hd; ++d) gqi[d] += ds * kj[d];
                     }
                     if (gk) {
                       T* gkj = gk + (b * tk + j) * width + h * hd;
                       for (std::int64_t d = 0; d < hd; ++d) gkj[d] += ds * qi[d];
                     }
                   }
                 }
               }
             }
           });
  }
  return out;
}

template <class T>
BasicTensor<T> cross_entropy(const BasicTensor<T>& logits, std::span<const std::int32_t> targets,
                             std::int32_t ignore_index) {
  if (logits.rank() < 1) throw ShapeError("cross_entropy", "logits must have a class axis");
  const auto classes = logits.dim(-1);
  const auto rows = classes == 0 ? 0 : logits.numel() / classes;
  if (static_cast<std::int64_t>(targets.size()) != rows) {
    throw ShapeError("cross_entropy", "logits " + shape_to_string(logits.shape()) + " with " +
                                          std::to_string(targets.size()) + " targets");
  }
  const auto lv = logits.values();
  std::vector<T> probs(lv.size(), T(0));
  T total = 0;
  std::int64_t counted = 0;
  for (std::int64_t r = 0; r < rows; ++r) {
    const auto t = targets[r];
    if (t == ignore_index) continue;
    if (t < 0 || t >= classes) {
      throw std::invalid_argument("cross_entropy: target " + std::to_string(t) + " outside " +
                                  std::to_string(classes) + " classes");
    }
    const T* row = lv.data() + r * classes;
    T mx = *std::max_element(row, row + classes);
    T z = 0;
    for (std::int64_t c = 0; c < classes; ++c) z += std::exp(row[c] - mx);
    const T log_z = std::log(z) + mx;
    total += log_z - row[t];
    for (std::int64_t c = 0; c < classes; ++c) probs[r * classes + c] = std::exp(row[c] - log_z);
    ++counted;
  }
  auto out = make<T>({}, {counted == 0 ? T(0) : total / static_cast<T>(counted)});
  if (counted == 0) return out;
  if (auto* tape = recording<T>({&logits})) {
    std::vector<std::int32_t> saved(targets.begin(), targets.end());
    attach(out, tape, {logits.node_ptr()},
           [probs = std::move(probs), saved = std::move(saved), classes, counted, ignore_index](Node<T>& self) {
             T* gl = input_grad(self, 0);
             const T scale_factor = self.grad[0] / static_cast<T>(counted);
             for (std::size_t r = 0; r < saved.size(); ++r) {
               if (saved[r] == ignore_index) continue;
               const auto off = static_cast<std::int64_t>(r) * classes;
               for (std::int64_t c = 0; c < classes; ++c) gl[off + c] += scale_factor * probs[off + c];
               gl[off + saved[r]] -= scale_factor;
             }
           });
  }
  return out;
}

#define EXTRALAB_INSTANTIATE(T)                                                                                 \
  template BasicTensor<T> matmul(const BasicTensor<T>&, const BasicTensor<T>&);                               \
  template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);                                  \
  template BasicTensor<T> sub(const BasicTensor<T>&, const BasicTensor<T>&);                                  \
  template BasicTensor<T> mul(const BasicTensor<T>&, const BasicTensor<T>&);                                  \
  template BasicTensor<T> scale(const BasicTensor<T>&, T);                                                    \
  template BasicTensor<T> sum(const BasicTensor<T>&);                                                         \
  template BasicTensor<T> mean(const BasicTensor<T>&);                                                        \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                                        \
  template BasicTensor<T> tanh(const BasicTensor<T>&);                                                        \
  template BasicTensor<T> sigmoid(const BasicTensor<T>&);                                                     \
  template BasicTensor<T> softmax(const BasicTensor<T>&, std::int64_t);                                       \
  template BasicTensor<T> layer_norm(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&, T); \
  template BasicTensor<T> dropout(const BasicTensor<T>&, T, bool, Rng&);                                      \
  template BasicTensor<T> embedding(const BasicTensor<T>&, std::span<const std::int32_t>, const Shape&);      \
  template BasicTensor<T> concat(const std::vector<BasicTensor<T>>&, std::int64_t);                           \
  template BasicTensor<T> slice(const BasicTensor<T>&, std::int64_t, std::int64_t, std::int64_t);             \
  template BasicTensor<T> transpose(const BasicTensor<T>&);                                                   \
  template BasicTensor<T> reshape(const BasicTensor<T>&, Shape);                                              \
  template BasicTensor<T> where_rows(std::span<const std::uint8_t>, const BasicTensor<T>&,                    \
                                     const BasicTensor<T>&);                                                  \
  template BasicTensor<T> scaled_dot_product_attention(const BasicTensor<T>&, const BasicTensor<T>&,          \
                                                       const BasicTensor<T>&, int, const AttentionMask&);     \
  template BasicTensor<T> cross_entropy(const BasicTensor<T>&, std::span<const std::int32_t>, std::int32_t);

EXTRALAB_INSTANTIATE(float)
EXTRALAB_INSTANTIATE(double)

#undef EXTRALAB_INSTANTIATE

}  // namespace extralab::ops
