// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "extralab/models.hpp"
#include "extralab/ops.hpp"

namespace extralab::detail {

struct Linear {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]
  Tensor operator()(const Tensor& x) const { return ops::add(ops::matmul(x, weight), bias); }
};

struct LayerNorm {
  Tensor gamma;
  Tensor beta;
  Tensor operator()(const Tensor& x) const { return ops::layer_norm(x, gamma, beta); }
};

class MlpModel final : public Model {
 public:
  MlpModel(const ModelConfig& config, const Vocabulary& vocab, std::uint64_t seed);
  Batch make_batch(std::span<const EncodedExample* const> examples) const override;
  Tensor forward(const Batch& batch, bool training, Rng& rng) override;
  std::vector<DecodeResult> decode(std::span<const TokenSeq> sources, int max_len) override;

 private:
  Tensor logits(std::span<const TokenId> source, std::int64_t batch, bool training, Rng& rng);
  std::vector<Linear> layers_;  // input, hidden..., output
};

// Gated recurrent unit with the r|z|n gate layout in the weight columns:
//   r = sigmoid(x Wr + br + h Ur + cr)
//   z = sigmoid(x Wz + bz + h Uz + cz)
//   n = tanh(x Wn + bn + r * (h Un + cn))
//   h' = (1 - z) * n + z * h
struct GruCell {
  Tensor w_input;   // [in, 3H]
  Tensor w_hidden;  // [H, 3H]
  Tensor b_input;   // [3H]
  Tensor b_hidden;  // [3H]
  std::int64_t hidden = 0;

  // projected_input is x W + b for this step, [B, 3H].
  Tensor step(const Tensor& projected_input, const Tensor& h) const;
};

class Seq2seqModel final : public Model {
 public:
  Seq2seqModel(const ModelConfig& config, const Vocabulary& vocab, std::uint64_t seed);
  Tensor forward(const Batch& batch, bool training, Rng& rng) override;
  std::vector<DecodeResult> decode(std::span<const TokenSeq> sources, int max_len) override;

 private:
  // Final hidden state per row, taken at each row's last non-PAD token.
  Tensor encode(std::span<const TokenId> source, std::int64_t batch, std::int64_t src_len) const;

  Tensor enc_embed_;
  Tensor dec_embed_;
  GruCell encoder_;
  GruCell decoder_;
  Linear output_;
};

struct MultiHeadAttention {
  Linear q, k, v, o;
  int heads = 1;
  Tensor operator()(const Tensor& query, const Tensor& memory, const ops::AttentionMask& mask) const;
};

struct FeedForward {
  Linear up, down;
};

struct EncoderLayer {
  MultiHeadAttention self_attn;
  FeedForward ff;
  LayerNorm norm1, norm2;
};

struct DecoderLayer {
  MultiHeadAttention self_attn, cross_attn;
  FeedForward ff;
  LayerNorm norm1, norm2, norm3;
};

// Post-norm encoder-decoder Transformer with sinusoidal positions, ReLU
// feed-forward blocks and final encoder/decoder norms.
class TransformerModel final : public Model {
 public:
  TransformerModel(const ModelConfig& config, const Vocabulary& vocab, std::uint64_t seed);
  Tensor forward(const Batch& batch, bool training, Rng& rng) override;
  std::vector<DecodeResult> decode(std::span<const TokenSeq> sources, int max_len) override;

 private:
  Tensor embed(const Tensor& table, std::span<const TokenId> ids, std::int64_t batch, std::int64_t len) const;
  Tensor encode(std::span<const TokenId> source, std::span<const std::uint8_t> src_pad, std::int64_t batch,
                std::int64_t src_len, bool training, Rng& rng) const;
  Tensor decode_logits(std::span<const TokenId> target_in, std::int64_t batch, std::int64_t tgt_len,
                       const Tensor& memory, std::span<const std::uint8_t> src_pad, bool training, Rng& rng) const;

  Tensor src_embed_;
  Tensor tgt_embed_;
  std::vector<EncoderLayer> encoder_;
  std::vector<DecoderLayer> decoder_;
  LayerNorm enc_norm_, dec_norm_;
  Linear output_;
};

}  // namespace extralab::detail
