// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "models_internal.hpp"

namespace extralab::detail {
namespace {

// pe[t, 2i] = sin(t / 10000^(2i/d)), pe[t, 2i+1] = cos(...)
Tensor positional_encoding(std::int64_t len, std::int64_t width) {
  std::vector<float> pe(static_cast<std::size_t>(len * width));
  for (std::int64_t t = 0; t < len; ++t) {
    for (std::int64_t i = 0; i < width; i += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(width));
      pe[t * width + i] = static_cast<float>(std::sin(static_cast<double>(t) * freq));
      if (i + 1 < width) pe[t * width + i + 1] = static_cast<float>(std::cos(static_cast<double>(t) * freq));
    }
  }
  return Tensor::from({len, width}, std::move(pe));
}

std::vector<std::uint8_t> padding_of(std::span<const TokenId> ids) {
  std::vector<std::uint8_t> pad(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) pad[i] = ids[i] == kPad;
  return pad;
}

}  // namespace

Tensor MultiHeadAttention::operator()(const Tensor& query, const Tensor& memory, const ops::AttentionMask& mask) const {
  return o(ops::scaled_dot_product_attention(q(query), k(memory), v(memory), heads, mask));
}

TransformerModel::TransformerModel(const ModelConfig& config, const Vocabulary& vocab, std::uint64_t seed)
    : Model(config, vocab) {
  Rng rng(seed, /*stream=*/0x74726e);
  const auto& c = config_.transformer;
  const std::int64_t d = c.d_model;
  const std::int64_t classes = num_classes();
  auto linear = [&](const std::string& name, std::int64_t in, std::int64_t out) {
    Linear l;
    l.weight = add_fan_in(name + ".weight", {in, out}, in, rng);
    l.bias = add_fan_in(name + ".bias", {out}, in, rng);
    return l;
  };
  auto norm = [&](const std::string& name) {
    LayerNorm n;
    n.gamma = add_parameter(name + ".gamma", {d});
    for (auto& v : n.gamma.values()) v = 1.f;
    n.beta = add_parameter(name + ".beta", {d});
    return n;
  };
  auto attention = [&](const std::string& name) {
    MultiHeadAttention a;
    a.q = linear(name + ".q", d, d);
    a.k = linear(name + ".k", d, d);
    a.v = linear(name + ".v", d, d);
    a.o = linear(name + ".o", d, d);
    a.heads = c.n_heads;
    return a;
  };
  src_embed_ = add_embedding("src_embedding", classes, d, rng);
  tgt_embed_ = add_embedding("tgt_embedding", classes, d, rng);
  for (int l = 0; l < c.n_layers_enc; ++l) {
    const auto p = "encoder." + std::to_string(l);
    EncoderLayer layer;
    layer.self_attn = attention(p + ".self_attn");
    layer.ff = {linear(p + ".ff.up", d, c.d_ff), linear(p + ".ff.down", c.d_ff, d)};
    layer.norm1 = norm(p + ".norm1");
    layer.norm2 = norm(p + ".norm2");
    encoder_.push_back(std::move(layer));
  }
  enc_norm_ = norm("encoder.norm");
  for (int l = 0; l < c.n_layers_dec; ++l) {
    const auto p = "decoder." + std::to_string(l);
    DecoderLayer layer;
    layer.self_attn = attention(p + ".self_attn");
    layer.cross_attn = attention(p + ".cross_attn");
    layer.ff = {linear(p + ".ff.up", d, c.d_ff), linear(p + ".ff.down", c.d_ff, d)};
    layer.norm1 = norm(p + ".norm1");
    layer.norm2 = norm(p + ".norm2");
    layer.norm3 = norm(p + ".norm3");
    decoder_.push_back(std::move(layer));
  }
  dec_norm_ = norm("decoder.norm");
  output_ = linear("output", d, classes);
}

Tensor TransformerModel::embed(const Tensor& table, std::span<const TokenId> ids, std::int64_t batch,
                               std::int64_t len) const {
  const std::int64_t d = config_.transformer.d_model;
  const Tensor x = ops::scale(ops::embedding(table, ids, {batch, len}), std::sqrt(static_cast<float>(d)));
  return ops::add(x, positional_encoding(len, d));
}

Tensor TransformerModel::encode(std::span<const TokenId> source, std::span<const std::uint8_t> src_pad,
                                std::int64_t batch, std::int64_t src_len, bool training, Rng& rng) const {
  const float p = config_.transformer.dropout_rate;
  Tensor x = ops::dropout(embed(src_embed_, source, batch, src_len), p, training, rng);
  const ops::AttentionMask mask{src_pad, false};
  for (const auto& layer : encoder_) {
    x = layer.norm1(ops::add(x, ops::dropout(layer.self_attn(x, x, mask), p, training, rng)));
    const Tensor ff = layer.ff.down(ops::dropout(ops::relu(layer.ff.up(x)), p, training, rng));
    x = layer.norm2(ops::add(x, ops::dropout(ff, p, training, rng)));
  }
  return enc_norm_(x);
}

Tensor TransformerModel::decode_logits(std::span<const TokenId> target_in, std::int64_t batch, std::int64_t tgt_len,
                                       const Tensor& memory, std::span<const std::uint8_t> src_pad, bool training,
                                       Rng& rng) const {
  const float p = config_.transformer.dropout_rate;
  const auto tgt_pad = padding_of(target_in);
  const ops::AttentionMask self_mask{tgt_pad, true};
  const ops::AttentionMask cross_mask{src_pad, false};
  Tensor y = ops::dropout(embed(tgt_embed_, target_in, batch, tgt_len), p, training, rng);
  for (const auto& layer : decoder_) {
    y = layer.norm1(ops::add(y, ops::dropout(layer.self_attn(y, y, self_mask), p, training, rng)));
    y = layer.norm2(ops::add(y, ops::dropout(layer.cross_attn(y, memory, cross_mask), p, training, rng)));
    const Tensor ff = layer.ff.down(ops::dropout(ops::relu(layer.ff.up(y)), p, training, rng));
    y = layer.norm3(ops::add(y, ops::dropout(ff, p, training, rng)));
  }
  return output_(dec_norm_(y));
}

Tensor TransformerModel::forward(const Batch& batch, bool training, Rng& rng) {
  const auto src_pad = padding_of(batch.source);
  const Tensor memory = encode(batch.source, src_pad, batch.size, batch.src_len, training, rng);
  return decode_logits(batch.decoder_input, batch.size, batch.tgt_len, memory, src_pad, training, rng);
}

std::vector<DecodeResult> TransformerModel::decode(std::span<const TokenSeq> sources, int max_len) {
  NoGradScope<float> no_grad;
  Rng unused(0);
  const auto batch = static_cast<std::int64_t>(sources.size());
  std::int64_t src_len = 0;
  for (const auto& s : sources) src_len = std::max<std::int64_t>(src_len, static_cast<std::int64_t>(s.ids.size()));
  std::vector<TokenId> source(static_cast<std::size_t>(batch * src_len), kPad);
  for (std::int64_t i = 0; i < batch; ++i) std::copy(sources[i].ids.begin(), sources[i].ids.end(), source.begin() + i * src_len);
  const auto src_pad = padding_of(source);
  const Tensor memory = encode(source, src_pad, batch, src_len, false, unused);

  const std::int64_t classes = num_classes();
  std::vector<std::vector<TokenId>> prefix(static_cast<std::size_t>(batch), std::vector<TokenId>{kBos});
  std::vector<bool> done(static_cast<std::size_t>(batch), false);
  for (int step = 0; step < max_len; ++step) {
    const std::int64_t len = step + 1;
    std::vector<TokenId> target_in(static_cast<std::size_t>(batch * len));
    for (std::int64_t i = 0; i < batch; ++i) std::copy(prefix[i].begin(), prefix[i].end(), target_in.begin() + i * len);
    // Finished rows keep decoding on their EOS-terminated prefix; their extra
    // tokens are discarded below.
    const Tensor logits = decode_logits(target_in, batch, len, memory, src_pad, false, unused);
    const auto v = logits.values();
    bool all_done = true;
    for (std::int64_t i = 0; i < batch; ++i) {
      const float* row = v.data() + (i * len + step) * classes;
      const auto tok = static_cast<TokenId>(std::max_element(row, row + classes) - row);
      prefix[i].push_back(done[i] ? kEos : tok);
      if (tok == kEos) done[i] = true;
      all_done = all_done && done[i];
    }
    if (all_done) break;
  }
  std::vector<DecodeResult> out;
  out.reserve(prefix.size());
  for (const auto& p : prefix) out.push_back(finish_decode(std::span<const TokenId>(p).subspan(1)));
  return out;
}

}  // namespace extralab::detail
