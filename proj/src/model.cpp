// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "extralab/models.hpp"
#include "models_internal.hpp"

namespace extralab {

const char* to_string(Architecture arch) {
  switch (arch) {
    case Architecture::mlp: return "mlp";
    case Architecture::seq2seq: return "seq2seq";
    case Architecture::transformer: return "transformer";
  }
  return "unknown";
}

const char* display_name(Architecture arch) {
  switch (arch) {
    case Architecture::mlp: return "MLP";
    case Architecture::seq2seq: return "Seq2seq";
    case Architecture::transformer: return "Transformer";
  }
  return "unknown";
}

std::optional<Architecture> architecture_from_string(std::string_view name) {
  if (name == "mlp") return Architecture::mlp;
  if (name == "seq2seq") return Architecture::seq2seq;
  if (name == "transformer") return Architecture::transformer;
  return std::nullopt;
}

void ModelConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("model config: ") + what);
  };
  switch (arch) {
    case Architecture::mlp:
      require(mlp.hidden_units > 0 && mlp.n_fc_layers >= 0, "mlp widths must be positive");
      require(mlp.input_len > 0 && mlp.output_len > 0, "mlp input/output lengths must be positive");
      require(mlp.dropout_rate >= 0.f && mlp.dropout_rate < 1.f, "mlp dropout_rate must lie in [0, 1)");
      break;
    case Architecture::seq2seq:
      require(seq2seq.embed_dim > 0 && seq2seq.hidden_units > 0, "seq2seq sizes must be positive");
      break;
    case Architecture::transformer:
      require(transformer.n_layers_enc > 0 && transformer.n_layers_dec > 0, "transformer layer counts must be positive");
      require(transformer.n_heads > 0 && transformer.d_model > 0 && transformer.d_ff > 0,
              "transformer sizes must be positive");
      require(transformer.d_model % transformer.n_heads == 0, "d_model must be divisible by n_heads");
      require(transformer.dropout_rate >= 0.f && transformer.dropout_rate < 1.f,
              "transformer dropout_rate must lie in [0, 1)");
      break;
  }
}

nlohmann::json ModelConfig::to_json() const {
  nlohmann::json j;
  j["arch"] = to_string(arch);
  switch (arch) {
    case Architecture::mlp:
      j["hidden_units"] = mlp.hidden_units;
      j["n_fc_layers"] = mlp.n_fc_layers;
      j["dropout_rate"] = mlp.dropout_rate;
      j["input_len"] = mlp.input_len;
      j["output_len"] = mlp.output_len;
      break;
    case Architecture::seq2seq:
      j["embed_dim"] = seq2seq.embed_dim;
      j["hidden_units"] = seq2seq.hidden_units;
      j["cell"] = "gru";
      break;
    case Architecture::transformer:
      j["n_layers_enc"] = transformer.n_layers_enc;
      j["n_layers_dec"] = transformer.n_layers_dec;
      j["n_heads"] = transformer.n_heads;
      j["d_model"] = transformer.d_model;
      j["d_ff"] = transformer.d_ff;
      j["dropout_rate"] = transformer.dropout_rate;
      break;
  }
  j["init"] = "linear/recurrent: uniform(+-1/sqrt(fan_in)); embeddings: normal(0, 1/sqrt(width))";
  return j;
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  auto arch = architecture_from_string(j.at("arch").get<std::string>());
  if (!arch) throw std::invalid_argument("model config: unknown arch '" + j.at("arch").get<std::string>() + "'");
  ModelConfig c = defaults(*arch);
  switch (*arch) {
    case Architecture::mlp:
      c.mlp.hidden_units = j.value("hidden_units", c.mlp.hidden_units);
      c.mlp.n_fc_layers = j.value("n_fc_layers", c.mlp.n_fc_layers);
      c.mlp.dropout_rate = j.value("dropout_rate", c.mlp.dropout_rate);
      c.mlp.input_len = j.value("input_len", c.mlp.input_len);
      c.mlp.output_len = j.value("output_len", c.mlp.output_len);
      break;
    case Architecture::seq2seq:
      c.seq2seq.embed_dim = j.value("embed_dim", c.seq2seq.embed_dim);
      c.seq2seq.hidden_units = j.value("hidden_units", c.seq2seq.hidden_units);
      break;
    case Architecture::transformer:
      c.transformer.n_layers_enc = j.value("n_layers_enc", c.transformer.n_layers_enc);
      c.transformer.n_layers_dec = j.value("n_layers_dec", c.transformer.n_layers_dec);
      c.transformer.n_heads = j.value("n_heads", c.transformer.n_heads);
      c.transformer.d_model = j.value("d_model", c.transformer.d_model);
      c.transformer.d_ff = j.value("d_ff", c.transformer.d_ff);
      c.transformer.dropout_rate = j.value("dropout_rate", c.transformer.dropout_rate);
      break;
  }
  c.validate();
  return c;
}

ModelConfig ModelConfig::defaults(Architecture arch) {
  ModelConfig c;
  c.arch = arch;
  return c;
}

std::vector<EncodedExample> encode_examples(std::span<const EquationExample> examples, const Vocabulary& vocab) {
  std::vector<EncodedExample> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    out.push_back({vocab.encode(ex.input_text).ids, vocab.encode(ex.answer_text).ids});
  }
  return out;
}

Tensor& Model::parameter(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return p.tensor;
  }
  throw std::out_of_range("no parameter named '" + name + "'");
}

std::size_t Model::param_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.tensor.numel());
  return n;
}

void Model::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

Tensor& Model::add_parameter(const std::string& name, Shape shape) {
  params_.push_back({name, Tensor::zeros(std::move(shape), /*requires_grad=*/true)});
  return params_.back().tensor;
}

Tensor& Model::add_fan_in(const std::string& name, Shape shape, std::int64_t fan_in, Rng& rng) {
  auto& t = add_parameter(name, std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : t.values()) v = static_cast<float>(rng.uniform(-bound, bound));
  return t;
}

Tensor& Model::add_embedding(const std::string& name, std::int64_t rows, std::int64_t width, Rng& rng) {
  auto& t = add_parameter(name, {rows, width});
  const double sd = 1.0 / std::sqrt(static_cast<double>(width));
  for (auto& v : t.values()) v = static_cast<float>(rng.normal() * sd);
  return t;
}

Batch Model::make_batch(std::span<const EncodedExample* const> examples) const {
  Batch b;
  b.size = static_cast<std::int64_t>(examples.size());
  for (const auto* ex : examples) {
    b.src_len = std::max<std::int64_t>(b.src_len, static_cast<std::int64_t>(ex->source.size()));
    b.tgt_len = std::max<std::int64_t>(b.tgt_len, static_cast<std::int64_t>(ex->answer.size()) + 1);
  }
  b.source.assign(static_cast<std::size_t>(b.size * b.src_len), kPad);
  b.decoder_input.assign(static_cast<std::size_t>(b.size * b.tgt_len), kPad);
  b.targets.assign(static_cast<std::size_t>(b.size * b.tgt_len), kPad);
  for (std::int64_t i = 0; i < b.size; ++i) {
    const auto& ex = *examples[i];
    std::copy(ex.source.begin(), ex.source.end(), b.source.begin() + i * b.src_len);
    auto* dec = b.decoder_input.data() + i * b.tgt_len;
    auto* tgt = b.targets.data() + i * b.tgt_len;
    dec[0] = kBos;
    for (std::size_t t = 0; t < ex.answer.size(); ++t) {
      dec[t + 1] = ex.answer[t];
      tgt[t] = ex.answer[t];
    }
    tgt[ex.answer.size()] = kEos;
  }
  return b;
}

nlohmann::json Model::meta() const {
  nlohmann::json j;
  j["architecture"] = to_string(config_.arch);
  j["config"] = config_.to_json();
  j["vocabulary"] = nlohmann::json::parse(vocab_.to_json());
  j["vocabulary_hash"] = vocab_.hash();
  j["param_count"] = param_count();
  return j;
}

void Model::save(const std::filesystem::path& path, const nlohmann::json& extra_meta) const {
  auto m = meta();
  if (!extra_meta.is_null()) m["extra"] = extra_meta;
  save_checkpoint(path, params_, m);
}

void Model::load_values(const Checkpoint& ckpt) {
  if (ckpt.tensors.size() != params_.size()) {
    throw std::runtime_error("checkpoint holds " + std::to_string(ckpt.tensors.size()) + " tensors, model has " +
                             std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& entry = ckpt.tensors[i];
    auto& p = params_[i];
    if (entry.name != p.name || entry.shape != p.tensor.shape()) {
      throw std::runtime_error("checkpoint tensor '" + entry.name + "' " + shape_to_string(entry.shape) +
                               " does not match parameter '" + p.name + "' " + shape_to_string(p.tensor.shape()));
    }
    std::copy(entry.values.begin(), entry.values.end(), p.tensor.values().begin());
  }
}

std::unique_ptr<Model> Model::load(const std::filesystem::path& path, nlohmann::json* meta_out) {
  auto ckpt = load_checkpoint(path);
  const auto& m = ckpt.meta;
  if (!m.contains("config") || !m.contains("vocabulary")) {
    throw std::runtime_error("checkpoint " + path.string() + " lacks a model config block");
  }
  auto config = ModelConfig::from_json(m.at("config"));
  auto vocab = Vocabulary::from_json(m.at("vocabulary").dump());
  if (m.contains("vocabulary_hash") && m.at("vocabulary_hash").get<std::string>() != vocab.hash()) {
    throw std::runtime_error("checkpoint " + path.string() + ": vocabulary hash mismatch");
  }
  auto model = make_model(config, vocab, 0);
  model->load_values(ckpt);
  if (meta_out) *meta_out = m;
  return model;
}

std::unique_ptr<Model> make_model(const ModelConfig& config, const Vocabulary& vocab, std::uint64_t seed) {
  config.validate();
  switch (config.arch) {
    case Architecture::mlp: return std::make_unique<detail::MlpModel>(config, vocab, seed);
    case Architecture::seq2seq: return std::make_unique<detail::Seq2seqModel>(config, vocab, seed);
    case Architecture::transformer: return std::make_unique<detail::TransformerModel>(config, vocab, seed);
  }
  throw std::invalid_argument("unknown architecture");
}

DecodeResult finish_decode(std::span<const TokenId> generated) {
  DecodeResult r;
  auto eos = std::find(generated.begin(), generated.end(), kEos);
  r.tokens.ids.assign(generated.begin(), eos);
  r.truncated = eos == generated.end();
  return r;
}

}  // namespace extralab
