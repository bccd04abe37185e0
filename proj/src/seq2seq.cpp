// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include "models_internal.hpp"

namespace extralab::detail {
namespace {

GruCell make_gru(const std::string& prefix, std::int64_t in, std::int64_t hidden,
                 const std::function<Tensor(const std::string&, Shape, std::int64_t)>& param) {
  GruCell cell;
  cell.hidden = hidden;
  cell.w_input = param(prefix + ".w_input", {in, 3 * hidden}, hidden);
  cell.w_hidden = param(prefix + ".w_hidden", {hidden, 3 * hidden}, hidden);
  cell.b_input = param(prefix + ".b_input", {3 * hidden}, hidden);
  cell.b_hidden = param(prefix + ".b_hidden", {3 * hidden}, hidden);
  return cell;
}

}  // namespace

Tensor GruCell::step(const Tensor& projected_input, const Tensor& h) const {
  const Tensor gh = ops::add(ops::matmul(h, w_hidden), b_hidden);
  const Tensor r = ops::sigmoid(ops::add(ops::slice(projected_input, -1, 0, hidden), ops::slice(gh, -1, 0, hidden)));
  const Tensor z =
      ops::sigmoid(ops::add(ops::slice(projected_input, -1, hidden, hidden), ops::slice(gh, -1, hidden, hidden)));
  const Tensor n = ops::tanh(
      ops::add(ops::slice(projected_input, -1, 2 * hidden, hidden), ops::mul(r, ops::slice(gh, -1, 2 * hidden, hidden))));
  // (1 - z) * n + z * h == n + z * (h - n)
  return ops::add(n, ops::mul(z, ops::sub(h, n)));
}

Seq2seqModel::Seq2seqModel(const ModelConfig& config, const Vocabulary& vocab, std::uint64_t seed)
    : Model(config, vocab) {
  Rng rng(seed, /*stream=*/0x733273);
  const auto& c = config_.seq2seq;
  const std::int64_t classes = num_classes();
  // Recurrent weights follow the usual GRU convention of bounding by the
  // hidden width.
  auto param = [&](const std::string& name, Shape shape, std::int64_t fan_in) {
    return add_fan_in(name, std::move(shape), fan_in, rng);
  };
  enc_embed_ = add_embedding("encoder.embedding", classes, c.embed_dim, rng);
  encoder_ = make_gru("encoder.gru", c.embed_dim, c.hidden_units, param);
  dec_embed_ = add_embedding("decoder.embedding", classes, c.embed_dim, rng);
  decoder_ = make_gru("decoder.gru", c.embed_dim, c.hidden_units, param);
  output_.weight = add_fan_in("output.weight", {c.hidden_units, classes}, c.hidden_units, rng);
  output_.bias = add_fan_in("output.bias", {classes}, c.hidden_units, rng);
}

Tensor Seq2seqModel::encode(std::span<const TokenId> source, std::int64_t batch, std::int64_t src_len) const {
  const auto hidden = encoder_.hidden;
  const Tensor embedded = ops::embedding(enc_embed_, source, {batch, src_len});
  const Tensor projected = ops::add(ops::matmul(embedded, encoder_.w_input), encoder_.b_input);
  Tensor h = Tensor::zeros({batch, hidden});
  std::vector<std::uint8_t> live(static_cast<std::size_t>(batch));
  for (std::int64_t t = 0; t < src_len; ++t) {
    bool any = false;
    for (std::int64_t i = 0; i < batch; ++i) {
      live[i] = source[i * src_len + t] != kPad;
      any = any || live[i];
    }
    if (!any) break;
    const Tensor x = ops::reshape(ops::slice(projected, 1, t, 1), {batch, 3 * hidden});
    h = ops::where_rows(std::span<const std::uint8_t>(live), encoder_.step(x, h), h);
  }
  return h;
}

Tensor Seq2seqModel::forward(const Batch& batch, bool /*training*/, Rng& /*rng*/) {
  const auto hidden = decoder_.hidden;
  Tensor h = encode(batch.source, batch.size, batch.src_len);
  const Tensor embedded = ops::embedding(dec_embed_, batch.decoder_input, {batch.size, batch.tgt_len});
  const Tensor projected = ops::add(ops::matmul(embedded, decoder_.w_input), decoder_.b_input);
  std::vector<Tensor> states;
  states.reserve(static_cast<std::size_t>(batch.tgt_len));
  for (std::int64_t t = 0; t < batch.tgt_len; ++t) {
    const Tensor x = ops::reshape(ops::slice(projected, 1, t, 1), {batch.size, 3 * hidden});
    h = decoder_.step(x, h);
    states.push_back(ops::reshape(h, {batch.size, 1, hidden}));
  }
  return output_(ops::concat(states, 1));
}

std::vector<DecodeResult> Seq2seqModel::decode(std::span<const TokenSeq> sources, int max_len) {
  NoGradScope<float> no_grad;
  const auto batch = static_cast<std::int64_t>(sources.size());
  std::int64_t src_len = 0;
  for (const auto& s : sources) src_len = std::max<std::int64_t>(src_len, static_cast<std::int64_t>(s.ids.size()));
  std::vector<TokenId> source(static_cast<std::size_t>(batch * src_len), kPad);
  for (std::int64_t i = 0; i < batch; ++i) std::copy(sources[i].ids.begin(), sources[i].ids.end(), source.begin() + i * src_len);

  Tensor h = encode(source, batch, src_len);
  std::vector<TokenId> prev(static_cast<std::size_t>(batch), kBos);
  std::vector<std::vector<TokenId>> generated(static_cast<std::size_t>(batch));
  std::vector<bool> done(static_cast<std::size_t>(batch), false);
  const std::int64_t classes = num_classes();
  for (int step = 0; step < max_len; ++step) {
    const Tensor x = ops::add(ops::matmul(ops::embedding(dec_embed_, prev, {batch}), decoder_.w_input), decoder_.b_input);
    h = decoder_.step(x, h);
    const Tensor logits = output_(h);
    const auto v = logits.values();
    bool all_done = true;
    for (std::int64_t i = 0; i < batch; ++i) {
      if (done[i]) continue;
      const float* row = v.data() + i * classes;
      const auto tok = static_cast<TokenId>(std::max_element(row, row + classes) - row);
      generated[i].push_back(tok);
      prev[i] = tok;
      if (tok == kEos) done[i] = true;
      all_done = all_done && done[i];
    }
    if (all_done) break;
  }
  std::vector<DecodeResult> out;
  out.reserve(generated.size());
  for (const auto& g : generated) out.push_back(finish_decode(g));
  return out;
}

}  // namespace extralab::detail
