// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end checks of the command-line tool: exit codes, output guards,
// replay subsetting and report ordering.

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#ifndef EXTRALAB_CLI_PATH
#error "EXTRALAB_CLI_PATH must name the extralab executable"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string out;  // stdout only; stderr goes to the test log
};

Result run(const std::string& args) {
  const std::string cmd = std::string("'") + EXTRALAB_CLI_PATH + "' " + args;
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("extralab_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  std::vector<json> rows;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) rows.push_back(json::parse(line));
  return rows;
}

const std::string kFixture = std::string(EXTRALAB_FIXTURE_DIR) + "/probe_synthetic_1000.jsonl";

}  // namespace

TEST_CASE("exit codes: success 0, usage 2, runtime 1") {
  CHECK(run("--version").code == 0);
  CHECK(run("").code == 2);
  CHECK(run("train --bogus").code == 2);
  CHECK(run("gen --task small-digit").code == 2);              // --out missing
  CHECK(run("gen --task nbase --base 40 --out /tmp/x").code == 2);  // out of range
  const auto out = scratch("runtime");
  CHECK(run("train --arch mlp --data /nonexistent/data --out '" + out.string() + "'").code == 1);
  CHECK(run("eval --checkpoint /nonexistent.ckpt --data /nonexistent.jsonl --out '" + out.string() + "'").code == 1);
}

TEST_CASE("replay --pairs N uses the first N fixture rows") {
  const auto out = scratch("replay");
  REQUIRE(run("probe --mode replay --fixture '" + kFixture + "' --pairs 100 --out '" + out.string() + "'").code == 0);
  std::ifstream sf(out / "summary.json");
  const auto summary = json::parse(sf);
  CHECK(summary.at("n_responses").get<int>() == 100);

  const auto fixture = read_jsonl(kFixture);
  const auto responses = read_jsonl(out / "responses.jsonl");
  REQUIRE(responses.size() == 100);
  for (std::size_t i = 0; i < responses.size(); ++i) CHECK(responses[i].at("prompt_id") == fixture[i].at("prompt_id"));
}

TEST_CASE("output directories are not overwritten without --force") {
  const auto out = scratch("force");
  const std::string base = "probe --mode replay --fixture '" + kFixture + "' --pairs 10 --out '" + out.string() + "'";
  REQUIRE(run(base).code == 0);
  CHECK(run(base).code == 2);
  CHECK(run(base + " --force").code == 0);

  const auto data = scratch("gen_force");
  const std::string gen = "gen --task small-digit --n-train 50 --n-val 10 --n-test 10 --out '" + data.string() + "'";
  REQUIRE(run(gen).code == 0);
  CHECK(run(gen).code == 2);
  CHECK(run(gen + " --force").code == 0);
}

TEST_CASE("report lists MLP, Seq2seq, Transformer in that order regardless of argument order") {
  const auto root = scratch("report");
  const auto data = root / "data";
  REQUIRE(run("gen --task small-digit --seed 3 --n-train 200 --n-val 40 --n-test 40 --out '" + data.string() + "'")
              .code == 0);
  const std::vector<std::pair<std::string, json>> archs = {
      {"transformer", {{"d_model", 16}, {"d_ff", 16}, {"n_heads", 2}, {"n_layers_enc", 1}, {"n_layers_dec", 1}}},
      {"mlp", {{"hidden_units", 16}, {"n_fc_layers", 1}}},
      {"seq2seq", {{"hidden_units", 16}, {"embed_dim", 8}}},
  };
  std::string dirs;
  for (const auto& [arch, model] : archs) {
    const auto cfg = root / (arch + ".json");
    std::ofstream(cfg) << json{{"model", model}}.dump();
    const auto out = root / arch;
    const auto r = run("train --config '" + cfg.string() + "' --arch " + arch + " --data '" + data.string() +
                       "' --out '" + out.string() + "' --trials 1 --epochs 1 --batch-size 64");
    REQUIRE(r.code == 0);
    dirs += " '" + out.string() + "'";
  }
  const auto table_file = root / "table.txt";
  const auto r = run("report" + dirs + " --out '" + table_file.string() + "'");
  REQUIRE(r.code == 0);
  const auto mlp = r.out.find("MLP");
  const auto s2s = r.out.find("Seq2seq");
  const auto tr = r.out.find("Transformer");
  REQUIRE(mlp != std::string::npos);
  REQUIRE(s2s != std::string::npos);
  REQUIRE(tr != std::string::npos);
  CHECK(mlp < s2s);
  CHECK(s2s < tr);
  std::ifstream tf(table_file);
  CHECK(std::string(std::istreambuf_iterator<char>(tf), {}) == r.out);
  CHECK(run("report" + dirs + " --out '" + table_file.string() + "'").code == 2);
}

TEST_CASE("train --trials 10 writes ten trial directories") {
  const auto root = scratch("ten");
  const auto data = root / "data";
  REQUIRE(run("gen --task small-digit --n-train 200 --n-val 40 --n-test 40 --out '" + data.string() + "'").code == 0);
  const auto cfg = root / "mlp.json";
  std::ofstream(cfg) << json{{"model", {{"hidden_units", 8}, {"n_fc_layers", 1}}}}.dump();
  const auto out = root / "mlp";
  REQUIRE(run("train --config '" + cfg.string() + "' --arch mlp --data '" + data.string() + "' --out '" +
              out.string() + "' --trials 10 --epochs 1")
              .code == 0);
  int dirs = 0;
  for (const auto& e : fs::directory_iterator(out)) dirs += e.is_directory() && e.path().filename().string().rfind("trial_", 0) == 0;
  CHECK(dirs == 10);
}
