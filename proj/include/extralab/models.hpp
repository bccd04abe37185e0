// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "extralab/checkpoint.hpp"
#include "extralab/rng.hpp"
#include "extralab/taskgen.hpp"
#include "extralab/tensor.hpp"
#include "extralab/vocab.hpp"

namespace extralab {

enum class Architecture { mlp, seq2seq, transformer };

const char* to_string(Architecture arch);
std::optional<Architecture> architecture_from_string(std::string_view name);
// "MLP", "Seq2seq", "Transformer".
const char* display_name(Architecture arch);

// One-hot encoded input window feeding a stack of ReLU layers; the output
// layer emits output_len positions of vocabulary logits. The layer stack is
// input(input_len*V -> hidden), n_fc_layers x (hidden -> hidden), and
// output(hidden -> output_len*V); dropout follows every ReLU.
struct MlpConfig {
  int hidden_units = 512;
  int n_fc_layers = 4;
  float dropout_rate = 0.1f;
  int input_len = 10;   // "dddd+dddd="
  int output_len = 5;   // up to 4 answer digits + EOS
};

struct Seq2seqConfig {
  int embed_dim = 512;
  int hidden_units = 512;
};

struct TransformerConfig {
  int n_layers_enc = 3;
  int n_layers_dec = 3;
  int n_heads = 8;
  int d_model = 256;
  int d_ff = 256;
  float dropout_rate = 0.1f;
};

struct ModelConfig {
  Architecture arch = Architecture::transformer;
  MlpConfig mlp;
  Seq2seqConfig seq2seq;
  TransformerConfig transformer;

  void validate() const;
  nlohmann::json to_json() const;
  // Missing fields keep their defaults.
  static ModelConfig from_json(const nlohmann::json& j);
  static ModelConfig defaults(Architecture arch);
};

// Token ids of one example: the input "a+b=" and the answer digits, without
// specials.
struct EncodedExample {
  std::vector<TokenId> source;
  std::vector<TokenId> answer;
};

std::vector<EncodedExample> encode_examples(std::span<const EquationExample> examples, const Vocabulary& vocab);

// Row-major [size, src_len] and [size, tgt_len] id grids, PAD-filled.
// decoder_input is BOS + answer; targets is answer + EOS.
struct Batch {
  std::int64_t size = 0;
  std::int64_t src_len = 0;
  std::int64_t tgt_len = 0;
  std::vector<TokenId> source;
  std::vector<TokenId> decoder_input;
  std::vector<TokenId> targets;
};

struct DecodeResult {
  TokenSeq tokens;         // up to, not including, the first EOS
  bool truncated = false;  // no EOS within max_len
};

class Model {
 public:
  virtual ~Model() = default;

  Architecture architecture() const { return config_.arch; }
  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  std::int64_t num_classes() const { return static_cast<std::int64_t>(vocab_.size()); }

  std::vector<NamedTensor>& parameters() { return params_; }
  const std::vector<NamedTensor>& parameters() const { return params_; }
  // Throws std::out_of_range for unknown names.
  Tensor& parameter(const std::string& name);
  std::size_t param_count() const;
  void zero_grad();

  // Pads a batch; throws std::invalid_argument if an example does not fit a
  // fixed-width architecture.
  virtual Batch make_batch(std::span<const EncodedExample* const> examples) const;

  // Teacher-forced logits [size, tgt_len, classes] aligned with
  // batch.targets.
  virtual Tensor forward(const Batch& batch, bool training, Rng& rng) = 0;

  // Greedy decoding; max_len counts generated tokens including EOS.
  virtual std::vector<DecodeResult> decode(std::span<const TokenSeq> sources, int max_len) = 0;

  // Checkpoint meta block: architecture, config, vocabulary and its hash.
  nlohmann::json meta() const;
  void save(const std::filesystem::path& path, const nlohmann::json& extra_meta = {}) const;
  static std::unique_ptr<Model> load(const std::filesystem::path& path, nlohmann::json* meta_out = nullptr);
  // Copies values from a checkpoint into this model; names and shapes must
  // match exactly.
  void load_values(const Checkpoint& ckpt);

 protected:
  Model(ModelConfig config, Vocabulary vocab) : config_(std::move(config)), vocab_(std::move(vocab)) {}

  Tensor& add_parameter(const std::string& name, Shape shape);
  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Tensor& add_fan_in(const std::string& name, Shape shape, std::int64_t fan_in, Rng& rng);
  // Normal(0, 1/sqrt(width)).
  Tensor& add_embedding(const std::string& name, std::int64_t rows, std::int64_t width, Rng& rng);

  ModelConfig config_;
  Vocabulary vocab_;
  std::vector<NamedTensor> params_;
};

std::unique_ptr<Model> make_model(const ModelConfig& config, const Vocabulary& vocab, std::uint64_t seed);

// Cuts generated ids at the first EOS; without one the result is truncated.
DecodeResult finish_decode(std::span<const TokenId> generated);

}  // namespace extralab
