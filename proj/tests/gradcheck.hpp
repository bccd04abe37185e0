// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Finite-difference gradient checking shared by the unit tests and the
// acceptance binary. Each case maps a list of leaf inputs to one output; the
// checked scalar is sum(output * R) for a fixed random weighting R, so every
// output element contributes with a distinct coefficient. The reference
// gradient is a five-point central difference of that scalar, accumulated in double.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "extralab/ops.hpp"
#include "extralab/rng.hpp"
#include "extralab/tensor.hpp"

namespace extralab::testing {

template <class T>
struct GradCase {
  std::string name;
  std::vector<BasicTensor<T>> inputs;
  std::function<BasicTensor<T>(const std::vector<BasicTensor<T>>&)> fn;
};

struct GradResult {
  std::string name;
  int coordinates = 0;
  double max_rel_error = 0;
};

// Pinned tolerances for the check.
template <class T>
struct GradTolerance;
template <>
struct GradTolerance<float> {
  static constexpr double step = 1e-2;
  static constexpr double max_rel = 1e-3;
  static constexpr double floor = 1e-2;  // denominator floor for near-zero gradients
};
template <>
struct GradTolerance<double> {
  static constexpr double step = 1e-6;
  static constexpr double max_rel = 1e-6;
  static constexpr double floor = 1e-6;
};

inline double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), floor});
  return std::fabs(analytic - numeric) / denom;
}

template <class T>
BasicTensor<T> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0, bool requires_grad = true) {
  std::vector<T> v(static_cast<std::size_t>(numel(shape)));
  for (auto& x : v) x = static_cast<T>(rng.uniform(lo, hi));
  return BasicTensor<T>::from(std::move(shape), std::move(v), requires_grad);
}

// Values bounded away from zero (for kinked ops such as relu).
template <class T>
BasicTensor<T> random_away_from_zero(Shape shape, Rng& rng, double min_abs = 0.1) {
  std::vector<T> v(static_cast<std::size_t>(numel(shape)));
  for (auto& x : v) {
    const double m = rng.uniform(min_abs, 1.0);
    x = static_cast<T>(rng.below(2) ? m : -m);
  }
  return BasicTensor<T>::from(std::move(shape), std::move(v), true);
}

template <class T>
GradResult check_gradients(const GradCase<T>& c, int n_coords = 50, std::uint64_t seed = 7) {
  using Tol = GradTolerance<T>;
  Rng rng(seed, 0x67726164);

  // Weighting of the output elements.
  BasicTensor<T> probe;
  {
    NoGradScope<T> no_grad;
    probe = c.fn(c.inputs);
  }
  std::vector<double> weights(static_cast<std::size_t>(probe.numel()));
  for (auto& w : weights) w = rng.uniform(0.5, 1.5) * (rng.below(2) ? 1.0 : -1.0);

  auto weighted = [&]() {
    NoGradScope<T> no_grad;
    const auto out = c.fn(c.inputs);
    double s = 0;
    const auto v = out.values();
    for (std::size_t i = 0; i < v.size(); ++i) s += weights[i] * static_cast<double>(v[i]);
    return s;
  };

  // Analytic gradients.
  for (auto input : c.inputs) input.zero_grad();
  {
    BasicTape<T> tape;
    TapeScope<T> scope(tape);
    const auto out = c.fn(c.inputs);
    std::vector<T> w(weights.begin(), weights.end());
    const auto wt = BasicTensor<T>::from(out.shape(), std::move(w));
    const auto loss = ops::sum(ops::mul(out, wt));
    tape.backward(loss);
  }

  // Sample coordinates across all inputs; every coordinate when fewer exist.
  std::vector<std::pair<std::size_t, std::int64_t>> coords;
  std::int64_t total = 0;
  for (const auto& in : c.inputs) total += in.numel();
  if (total <= n_coords) {
    for (std::size_t i = 0; i < c.inputs.size(); ++i)
      for (std::int64_t j = 0; j < c.inputs[i].numel(); ++j) coords.emplace_back(i, j);
  } else {
    for (int k = 0; k < n_coords; ++k) {
      auto flat = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(total)));
      std::size_t i = 0;
      while (flat >= c.inputs[i].numel()) flat -= c.inputs[i++].numel();
      coords.emplace_back(i, flat);
    }
  }

  GradResult r;
  r.name = c.name;
  for (const auto& [i, j] : coords) {
    auto input = c.inputs[i];
    auto vals = input.values();
    const T original = vals[static_cast<std::size_t>(j)];
    // Five-point stencil: fourth-order accurate, so a step large enough to
    // swamp float rounding still leaves negligible truncation error.
    auto at = [&](double offset) {
      const T moved = static_cast<T>(original + offset);
      vals[static_cast<std::size_t>(j)] = moved;
      const double f = weighted();
      return std::pair<double, double>(f, static_cast<double>(moved) - static_cast<double>(original));
    };
    const auto [f1p, h1p] = at(Tol::step);
    const auto [f1m, h1m] = at(-Tol::step);
    const auto [f2p, h2p] = at(2 * Tol::step);
    const auto [f2m, h2m] = at(-2 * Tol::step);
    vals[static_cast<std::size_t>(j)] = original;
    const double h = (h1p - h1m + (h2p - h2m) / 2) / 4;  // representable step
    const double numeric = (8 * (f1p - f1m) - (f2p - f2m)) / (12 * h);
    const double analytic = input.has_grad() ? static_cast<double>(input.grad()[static_cast<std::size_t>(j)]) : 0.0;
    r.max_rel_error = std::max(r.max_rel_error, relative_error(analytic, numeric, Tol::floor));
    ++r.coordinates;
  }
  return r;
}

// One case per differentiable op, on small random shapes.
template <class T>
std::vector<GradCase<T>> standard_cases(std::uint64_t seed = 11) {
  using Ten = BasicTensor<T>;
  using In = std::vector<Ten>;
  Rng rng(seed, 0x63617365);
  std::vector<GradCase<T>> cases;
  auto rt = [&](Shape s) { return random_tensor<T>(std::move(s), rng); };

  cases.push_back({"matmul", {rt({2, 3, 4}), rt({4, 5})}, [](const In& in) { return ops::matmul(in[0], in[1]); }});
  cases.push_back({"add", {rt({3, 4}), rt({3, 4})}, [](const In& in) { return ops::add(in[0], in[1]); }});
  cases.push_back({"add_broadcast", {rt({2, 3, 4}), rt({4})}, [](const In& in) { return ops::add(in[0], in[1]); }});
  cases.push_back({"sub_broadcast", {rt({2, 3, 4}), rt({3, 4})}, [](const In& in) { return ops::sub(in[0], in[1]); }});
  cases.push_back({"mul", {rt({3, 4}), rt({3, 4})}, [](const In& in) { return ops::mul(in[0], in[1]); }});
  cases.push_back({"mul_broadcast", {rt({2, 3, 4}), rt({4})}, [](const In& in) { return ops::mul(in[0], in[1]); }});
  cases.push_back({"scale", {rt({3, 5})}, [](const In& in) { return ops::scale(in[0], T(-1.7)); }});
  cases.push_back({"sum", {rt({3, 5})}, [](const In& in) { return ops::sum(in[0]); }});
  cases.push_back({"mean", {rt({3, 5})}, [](const In& in) { return ops::mean(in[0]); }});
  cases.push_back({"relu", {random_away_from_zero<T>({4, 6}, rng)}, [](const In& in) { return ops::relu(in[0]); }});
  cases.push_back({"tanh", {rt({4, 6})}, [](const In& in) { return ops::tanh(in[0]); }});
  cases.push_back({"sigmoid", {rt({4, 6})}, [](const In& in) { return ops::sigmoid(in[0]); }});
  cases.push_back({"softmax_last", {rt({3, 7})}, [](const In& in) { return ops::softmax(in[0], -1); }});
  cases.push_back({"softmax_axis1", {rt({2, 4, 3})}, [](const In& in) { return ops::softmax(in[0], 1); }});
  cases.push_back({"layer_norm",
                   {rt({3, 8}), random_tensor<T>({8}, rng, 0.5, 1.5), rt({8})},
                   [](const In& in) { return ops::layer_norm(in[0], in[1], in[2]); }});
  cases.push_back({"dropout", {rt({6, 8})}, [](const In& in) {
                     Rng drop(99, 1);  // the same mask on every evaluation
                     return ops::dropout(in[0], T(0.3), true, drop);
                   }});
  cases.push_back({"embedding", {rt({6, 4})}, [](const In& in) {
                     static const std::vector<std::int32_t> ids = {0, 3, 3, 5, 1, 0};
                     return ops::embedding(in[0], std::span<const std::int32_t>(ids), Shape{2, 3});
                   }});
  cases.push_back({"concat", {rt({2, 3, 2}), rt({2, 3, 4})},
                   [](const In& in) { return ops::concat(std::vector<Ten>{in[0], in[1]}, -1); }});
  cases.push_back({"slice", {rt({4, 5, 3})}, [](const In& in) { return ops::slice(in[0], 1, 1, 3); }});
  cases.push_back({"transpose", {rt({2, 3, 4})}, [](const In& in) { return ops::transpose(in[0]); }});
  cases.push_back({"reshape", {rt({2, 3, 4})}, [](const In& in) { return ops::reshape(in[0], Shape{6, 4}); }});
  cases.push_back({"where_rows", {rt({4, 3}), rt({4, 3})}, [](const In& in) {
                     static const std::vector<std::uint8_t> take = {1, 0, 0, 1};
                     return ops::where_rows(std::span<const std::uint8_t>(take), in[0], in[1]);
                   }});
  cases.push_back({"attention", {rt({2, 3, 4}), rt({2, 5, 4}), rt({2, 5, 4})}, [](const In& in) {
                     return ops::scaled_dot_product_attention(in[0], in[1], in[2], 2);
                   }});
  cases.push_back({"attention_causal", {rt({2, 4, 4}), rt({2, 4, 4}), rt({2, 4, 4})}, [](const In& in) {
                     ops::AttentionMask m;
                     m.causal = true;
                     return ops::scaled_dot_product_attention(in[0], in[1], in[2], 2, m);
                   }});
  cases.push_back({"attention_padding", {rt({2, 3, 4}), rt({2, 4, 4}), rt({2, 4, 4})}, [](const In& in) {
                     static const std::vector<std::uint8_t> pad = {0, 0, 1, 1, 0, 0, 0, 1};
                     ops::AttentionMask m;
                     m.key_padding = pad;
                     return ops::scaled_dot_product_attention(in[0], in[1], in[2], 2, m);
                   }});
  cases.push_back({"cross_entropy", {random_tensor<T>({2, 3, 5}, rng, -2.0, 2.0)}, [](const In& in) {
                     static const std::vector<std::int32_t> targets = {1, 0, 4, 2, -1, 3};
                     return ops::cross_entropy(in[0], std::span<const std::int32_t>(targets), -1);
                   }});
  return cases;
}

}  // namespace extralab::testing
