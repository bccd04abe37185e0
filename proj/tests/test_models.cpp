// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "extralab/checkpoint.hpp"
#include "extralab/models.hpp"
#include "extralab/taskgen.hpp"

using namespace extralab;

namespace {

const Vocabulary& decimal() {
  static const auto v = Vocabulary::build({TaskKind::decimal_addition});
  return v;
}

// Independent parameter-count oracles from the layer shapes.
std::int64_t linear_params(std::int64_t in, std::int64_t out) { return in * out + out; }

std::int64_t mlp_oracle(const MlpConfig& c, std::int64_t v) {
  std::int64_t n = linear_params(c.input_len * v, c.hidden_units);
  n += c.n_fc_layers * linear_params(c.hidden_units, c.hidden_units);
  return n + linear_params(c.hidden_units, c.output_len * v);
}

std::int64_t seq2seq_oracle(const Seq2seqConfig& c, std::int64_t v) {
  const std::int64_t e = c.embed_dim, h = c.hidden_units;
  const std::int64_t gru = 3 * h * (e + h) + 6 * h;  // input and recurrent weights, two bias vectors
  return 2 * v * e + 2 * gru + linear_params(h, v);
}

std::int64_t transformer_oracle(const TransformerConfig& c, std::int64_t v) {
  const std::int64_t d = c.d_model;
  const std::int64_t attn = 4 * linear_params(d, d);
  const std::int64_t ff = linear_params(d, c.d_ff) + linear_params(c.d_ff, d);
  const std::int64_t norm = 2 * d;
  const std::int64_t enc = attn + ff + 2 * norm;
  const std::int64_t dec = 2 * attn + ff + 3 * norm;
  return 2 * v * d + c.n_layers_enc * enc + c.n_layers_dec * dec + 2 * norm + linear_params(d, v);
}

ModelConfig tiny_transformer() {
  auto c = ModelConfig::defaults(Architecture::transformer);
  c.transformer.n_layers_enc = 1;
  c.transformer.n_layers_dec = 1;
  c.transformer.d_model = 16;
  c.transformer.d_ff = 24;
  c.transformer.n_heads = 2;
  return c;
}

ModelConfig tiny(Architecture arch) {
  if (arch == Architecture::transformer) return tiny_transformer();
  auto c = ModelConfig::defaults(arch);
  c.mlp.hidden_units = 32;
  c.mlp.n_fc_layers = 1;
  c.seq2seq.embed_dim = 12;
  c.seq2seq.hidden_units = 16;
  return c;
}

std::vector<EncodedExample> some_examples() {
  std::vector<EquationExample> raw;
  for (auto [a, b] : {std::pair{12, 7}, {999, 1}, {1500, 1500}, {3, 2480}, {0, 0}}) {
    raw.push_back(make_addition_example(static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(b), decimal()));
  }
  return encode_examples(raw, decimal());
}

std::vector<const EncodedExample*> pointers(const std::vector<EncodedExample>& xs) {
  std::vector<const EncodedExample*> out;
  for (const auto& x : xs) out.push_back(&x);
  return out;
}

}  // namespace

TEST_CASE("parameter counts of the default models match the layer-shape oracle") {
  const auto v = static_cast<std::int64_t>(decimal().size());
  const auto mlp = make_model(ModelConfig::defaults(Architecture::mlp), decimal(), 1);
  const auto s2s = make_model(ModelConfig::defaults(Architecture::seq2seq), decimal(), 1);
  const auto tfm = make_model(ModelConfig::defaults(Architecture::transformer), decimal(), 1);
  CHECK(static_cast<std::int64_t>(mlp->param_count()) == mlp_oracle(MlpConfig{}, v));
  CHECK(static_cast<std::int64_t>(s2s->param_count()) == seq2seq_oracle(Seq2seqConfig{}, v));
  CHECK(static_cast<std::int64_t>(tfm->param_count()) == transformer_oracle(TransformerConfig{}, v));
  CHECK(mlp->param_count() == 1166411);
  CHECK(s2s->param_count() == 3174927);
  CHECK(tfm->param_count() == 3178255);
}

TEST_CASE("initialization is deterministic in the seed") {
  for (auto arch : {Architecture::mlp, Architecture::seq2seq, Architecture::transformer}) {
    const auto x = make_model(tiny(arch), decimal(), 5);
    const auto y = make_model(tiny(arch), decimal(), 5);
    const auto z = make_model(tiny(arch), decimal(), 6);
    bool all_same = true, any_diff = false;
    for (std::size_t i = 0; i < x->parameters().size(); ++i) {
      const auto a = x->parameters()[i].tensor.values();
      const auto b = y->parameters()[i].tensor.values();
      const auto c = z->parameters()[i].tensor.values();
      all_same = all_same && std::equal(a.begin(), a.end(), b.begin());
      any_diff = any_diff || !std::equal(a.begin(), a.end(), c.begin());
    }
    CHECK(all_same);
    CHECK(any_diff);
  }
}

TEST_CASE("forward logits have the target grid shape") {
  const auto xs = some_examples();
  const auto ptrs = pointers(xs);
  for (auto arch : {Architecture::mlp, Architecture::seq2seq, Architecture::transformer}) {
    auto m = make_model(tiny(arch), decimal(), 1);
    const auto batch = m->make_batch(ptrs);
    Rng rng(1);
    NoGradScope<float> no_grad;
    const auto logits = m->forward(batch, false, rng);
    CHECK(logits.shape() == Shape{batch.size, batch.tgt_len, m->num_classes()});
    for (auto v : logits.values()) REQUIRE(std::isfinite(v));
  }
}

TEST_CASE("transformer decoder is causal") {
  auto m = make_model(tiny_transformer(), decimal(), 3);
  const auto xs = some_examples();
  const std::vector<const EncodedExample*> one = {&xs[2]};
  auto batch = m->make_batch(one);
  Rng rng(1);
  NoGradScope<float> no_grad;
  const auto before = m->forward(batch, false, rng);
  // Changing decoder input at position t may only affect outputs at >= t.
  const std::int64_t t = 2;
  batch.decoder_input[static_cast<std::size_t>(t)] = decimal().digit_id(7);
  const auto after = m->forward(batch, false, rng);
  const auto classes = m->num_classes();
  for (std::int64_t pos = 0; pos < batch.tgt_len; ++pos) {
    double diff = 0;
    for (std::int64_t c = 0; c < classes; ++c) diff += std::fabs(before.at(pos * classes + c) - after.at(pos * classes + c));
    if (pos < t) {
      CHECK(diff == 0.0);
    } else if (pos == t) {
      CHECK(diff > 0.0);
    }
  }
}

TEST_CASE("batching and padding do not change per-example outputs") {
  const auto xs = some_examples();
  for (auto arch : {Architecture::mlp, Architecture::seq2seq, Architecture::transformer}) {
    auto m = make_model(tiny(arch), decimal(), 2);
    std::vector<TokenSeq> sources;
    for (const auto& x : xs) sources.push_back(TokenSeq{x.source});
    NoGradScope<float> no_grad;
    const auto together = m->decode(sources, 6);
    for (std::size_t i = 0; i < sources.size(); ++i) {
      const auto alone = m->decode(std::span<const TokenSeq>(&sources[i], 1), 6);
      CHECK(alone[0].tokens == together[i].tokens);
      CHECK(alone[0].truncated == together[i].truncated);
    }

    // Teacher-forced logits for "12+7=" alone vs. padded next to a longer example.
    const std::vector<const EncodedExample*> single = {&xs[0]};
    const std::vector<const EncodedExample*> pair = {&xs[0], &xs[2]};
    Rng rng(1);
    const auto b1 = m->make_batch(single);
    const auto b2 = m->make_batch(pair);
    const auto l1 = m->forward(b1, false, rng);
    const auto l2 = m->forward(b2, false, rng);
    const auto classes = m->num_classes();
    // Compare the positions that carry real targets.
    for (std::int64_t pos = 0; pos < b1.tgt_len; ++pos) {
      if (b1.targets[static_cast<std::size_t>(pos)] == kPad) continue;
      for (std::int64_t c = 0; c < classes; ++c) {
        CHECK(l1.at(pos * classes + c) == doctest::Approx(l2.at(pos * classes + c)).epsilon(1e-4));
      }
    }
  }
}

TEST_CASE("decode output is bounded and truncation is flagged") {
  auto m = make_model(tiny(Architecture::seq2seq), decimal(), 4);
  const std::vector<TokenSeq> src = {decimal().encode("12+7=")};
  NoGradScope<float> no_grad;
  const auto r = m->decode(src, 3);
  CHECK(r[0].tokens.length() <= 3);
  if (r[0].tokens.length() == 3) CHECK(r[0].truncated);

  const std::vector<TokenId> with_eos = {4, 5, kEos, 6};
  const auto f = finish_decode(with_eos);
  CHECK(f.tokens.ids == std::vector<TokenId>{4, 5});
  CHECK(!f.truncated);
  const std::vector<TokenId> without = {4, 5, 6};
  CHECK(finish_decode(without).truncated);
}

TEST_CASE("mlp rejects examples that do not fit its window") {
  auto m = make_model(tiny(Architecture::mlp), decimal(), 1);
  const auto big = encode_examples(
      std::vector<EquationExample>{make_addition_example(BigUInt(123456), BigUInt(1), decimal())}, decimal());
  const std::vector<const EncodedExample*> ptrs = {&big[0]};
  CHECK_THROWS_AS(m->make_batch(ptrs), std::invalid_argument);
}

TEST_CASE("checkpoints round-trip weights, config and vocabulary") {
  const auto dir = std::filesystem::temp_directory_path() / "extralab_ckpt_test";
  std::filesystem::create_directories(dir);
  for (auto arch : {Architecture::mlp, Architecture::seq2seq, Architecture::transformer}) {
    auto m = make_model(tiny(arch), decimal().permute_digits(3), 9);
    const auto path = dir / (std::string(to_string(arch)) + ".ckpt");
    m->save(path, {{"note", "test"}});
    nlohmann::json meta;
    auto back = Model::load(path, &meta);
    CHECK(back->architecture() == arch);
    CHECK(back->vocab() == m->vocab());
    CHECK(back->config().to_json() == m->config().to_json());
    CHECK(meta.at("extra").at("note") == "test");
    REQUIRE(back->parameters().size() == m->parameters().size());
    for (std::size_t i = 0; i < m->parameters().size(); ++i) {
      CHECK(back->parameters()[i].name == m->parameters()[i].name);
      const auto a = m->parameters()[i].tensor.values();
      const auto b = back->parameters()[i].tensor.values();
      CHECK(std::equal(a.begin(), a.end(), b.begin()));
    }
  }

  // Truncated and foreign files are rejected.
  const auto path = dir / "transformer.ckpt";
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size / 2);
  CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
  std::ofstream(dir / "junk.ckpt") << "not a checkpoint";
  CHECK_THROWS_AS(load_checkpoint(dir / "junk.ckpt"), std::runtime_error);
  std::filesystem::remove_all(dir);
}
