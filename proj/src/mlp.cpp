// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <stdexcept>

#include "models_internal.hpp"

namespace extralab::detail {

MlpModel::MlpModel(const ModelConfig& config, const Vocabulary& vocab, std::uint64_t seed) : Model(config, vocab) {
  Rng rng(seed, /*stream=*/0x6d6c70);
  const auto& c = config_.mlp;
  const std::int64_t classes = num_classes();
  const std::int64_t in_width = c.input_len * classes;
  const std::int64_t out_width = c.output_len * classes;
  std::int64_t prev = in_width;
  for (int i = 0; i <= c.n_fc_layers; ++i) {
    const auto name = "fc" + std::to_string(i);
    Linear l;
    l.weight = add_fan_in(name + ".weight", {prev, c.hidden_units}, prev, rng);
    l.bias = add_fan_in(name + ".bias", {c.hidden_units}, prev, rng);
    layers_.push_back(l);
    prev = c.hidden_units;
  }
  Linear out;
  out.weight = add_fan_in("out.weight", {prev, out_width}, prev, rng);
  out.bias = add_fan_in("out.bias", {out_width}, prev, rng);
  layers_.push_back(out);
}

Batch MlpModel::make_batch(std::span<const EncodedExample* const> examples) const {
  const auto& c = config_.mlp;
  Batch b;
  b.size = static_cast<std::int64_t>(examples.size());
  b.src_len = c.input_len;
  b.tgt_len = c.output_len;
  b.source.assign(static_cast<std::size_t>(b.size * b.src_len), kPad);
  b.targets.assign(static_cast<std::size_t>(b.size * b.tgt_len), kPad);
  for (std::int64_t i = 0; i < b.size; ++i) {
    const auto& ex = *examples[i];
    if (static_cast<std::int64_t>(ex.source.size()) > c.input_len) {
      throw std::invalid_argument("mlp: input of " + std::to_string(ex.source.size()) +
                                  " tokens exceeds input_len " + std::to_string(c.input_len));
    }
    if (static_cast<std::int64_t>(ex.answer.size()) + 1 > c.output_len) {
      throw std::invalid_argument("mlp: answer of " + std::to_string(ex.answer.size()) +
                                  " tokens plus EOS exceeds output_len " + std::to_string(c.output_len));
    }
    std::copy(ex.source.begin(), ex.source.end(), b.source.begin() + i * b.src_len);
    auto* tgt = b.targets.data() + i * b.tgt_len;
    std::copy(ex.answer.begin(), ex.answer.end(), tgt);
    tgt[ex.answer.size()] = kEos;
  }
  return b;
}

Tensor MlpModel::logits(std::span<const TokenId> source, std::int64_t batch, bool training, Rng& rng) {
  const auto& c = config_.mlp;
  const std::int64_t classes = num_classes();
  const std::int64_t in_width = c.input_len * classes;
  std::vector<float> onehot(static_cast<std::size_t>(batch * in_width), 0.f);
  for (std::int64_t i = 0; i < batch; ++i) {
    for (std::int64_t t = 0; t < c.input_len; ++t) {
      onehot[static_cast<std::size_t>(i * in_width + t * classes + source[i * c.input_len + t])] = 1.f;
    }
  }
  Tensor h = Tensor::from({batch, in_width}, std::move(onehot));
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    h = ops::dropout(ops::relu(layers_[l](h)), c.dropout_rate, training, rng);
  }
  return ops::reshape(layers_.back()(h), {batch, c.output_len, classes});
}

Tensor MlpModel::forward(const Batch& batch, bool training, Rng& rng) {
  if (batch.src_len != config_.mlp.input_len || batch.tgt_len != config_.mlp.output_len) {
    throw std::invalid_argument("mlp: batch was not built for this model's fixed lengths");
  }
  return logits(batch.source, batch.size, training, rng);
}

std::vector<DecodeResult> MlpModel::decode(std::span<const TokenSeq> sources, int max_len) {
  const auto& c = config_.mlp;
  std::vector<EncodedExample> encoded;
  encoded.reserve(sources.size());
  for (const auto& s : sources) {
    if (static_cast<std::int64_t>(s.ids.size()) > c.input_len) {
      throw std::invalid_argument("mlp: input of " + std::to_string(s.ids.size()) + " tokens exceeds input_len " +
                                  std::to_string(c.input_len));
    }
    encoded.push_back({s.ids, {}});
  }
  std::vector<const EncodedExample*> ptrs;
  for (const auto& e : encoded) ptrs.push_back(&e);
  const auto batch = make_batch(ptrs);
  NoGradScope<float> no_grad;
  Rng unused(0);
  const Tensor out = logits(batch.source, batch.size, false, unused);
  const std::int64_t classes = num_classes();
  const auto steps = std::min<std::int64_t>(c.output_len, max_len);
  std::vector<DecodeResult> results;
  results.reserve(sources.size());
  const auto v = out.values();
  for (std::int64_t i = 0; i < batch.size; ++i) {
    std::vector<TokenId> generated;
    for (std::int64_t t = 0; t < steps; ++t) {
      const float* row = v.data() + (i * c.output_len + t) * classes;
      generated.push_back(static_cast<TokenId>(std::max_element(row, row + classes) - row));
      if (generated.back() == kEos) break;
    }
    results.push_back(finish_decode(generated));
  }
  return results;
}

}  // namespace extralab::detail
