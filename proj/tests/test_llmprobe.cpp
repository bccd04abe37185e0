// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "extralab/llmprobe.hpp"
#include "extralab/taskgen.hpp"

#ifndef EXTRALAB_FIXTURE_DIR
#error "EXTRALAB_FIXTURE_DIR must point at tests/fixtures"
#endif

using namespace extralab;

namespace {

const std::filesystem::path kFixtures = EXTRALAB_FIXTURE_DIR;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ResponseClass cls(std::string_view raw, std::string_view truth) { return classify_response(raw, truth).cls; }

// Largest-remainder apportionment of reference counts to a smaller total.
std::array<std::size_t, 3> apportion(const std::array<std::size_t, 3>& counts, std::size_t total) {
  std::size_t all = 0;
  for (auto c : counts) all += c;
  std::array<std::size_t, 3> out{};
  std::array<std::pair<std::size_t, int>, 3> rem{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    out[i] = counts[i] * total / all;
    rem[i] = {counts[i] * total % all, i};
    assigned += out[i];
  }
  std::sort(rem.begin(), rem.end(), std::greater<>());
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++out[rem[k].second];
  return out;
}

}  // namespace

TEST_CASE("prompt template round-trips") {
  const auto p = make_prompt(3, "123", "45");
  CHECK(p.text == "What is 123 + 45?");
  CHECK(p.truth == "168");
  CHECK(parse_prompt(p.text) == std::make_pair(std::string("123"), std::string("45")));
  CHECK(!parse_prompt("What is 1 + 2").has_value());
  CHECK(!parse_prompt("What is 1+2?").has_value());
  const auto pairs = gen_large_digit_pairs(50, 100, 1);
  const auto prompts = render_prompts(pairs);
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    CHECK(prompts[i].id == i);
    CHECK(prompts[i].truth == pairs[i].c.to_decimal());
  }
}

TEST_CASE("response normalization") {
  CHECK(normalize_numeric("  1234 \n") == "1234");
  CHECK(normalize_numeric("1234.") == "1234");
  CHECK(normalize_numeric("1,234,567") == "1234567");
  CHECK(normalize_numeric("-0012") == "-12");
  CHECK(normalize_numeric("000") == "0");
  CHECK(!normalize_numeric("1,23").has_value());
  CHECK(!normalize_numeric("12,345,67").has_value());
  CHECK(!normalize_numeric("1234..").has_value());
  CHECK(!normalize_numeric("12 34").has_value());
  CHECK(!normalize_numeric("").has_value());
  CHECK(!normalize_numeric("-").has_value());
  CHECK(!normalize_numeric("1e3").has_value());
  CHECK(!normalize_numeric("The answer is 5").has_value());

  CHECK(cls("19", "19") == ResponseClass::correct);
  CHECK(cls(" 19.\n", "19") == ResponseClass::correct);
  CHECK(cls("1,019", "1019") == ResponseClass::correct);
  CHECK(cls("20", "19") == ResponseClass::numerical_incorrect);
  CHECK(cls("-19", "19") == ResponseClass::numerical_incorrect);
  CHECK(cls("19\n\nWhat is 2 + 2?", "19") == ResponseClass::non_numerical);
  // Values are compared exactly, far beyond 64-bit range.
  const std::string big(100, '9');
  CHECK(cls(big, big) == ResponseClass::correct);
  CHECK(cls(big + "0", big) == ResponseClass::numerical_incorrect);
}

TEST_CASE("six-record fixture classifies as 1 correct, 3 non-numerical, 2 numerical") {
  const auto fixture = read_fixture(kFixtures / "probe_six.jsonl");
  REQUIRE(fixture.size() == 6);
  const auto responses = probe_replay(fixture, {});
  const auto s = summarize(responses);
  CHECK(s.n_responses == 6);
  CHECK(s.counts[static_cast<int>(ResponseClass::correct)] == 1);
  CHECK(s.counts[static_cast<int>(ResponseClass::non_numerical)] == 3);
  CHECK(s.counts[static_cast<int>(ResponseClass::numerical_incorrect)] == 2);
}

TEST_CASE("synthetic 1000-record fixture reproduces the golden summary byte for byte") {
  const auto fixture = read_fixture(kFixtures / "probe_synthetic_1000.jsonl");
  REQUIRE(fixture.size() == 1000);
  const auto responses = probe_replay(fixture, {});
  const auto s = summarize(responses);
  CHECK(summary_json(s, SamplingParams{}) == slurp(kFixtures / "probe_synthetic_1000.summary.json"));

  // The class counts are the reference counts of a 100,000-prompt run scaled to 1000.
  const auto expected = apportion({66531, 32819, 650}, 1000);
  CHECK(expected == std::array<std::size_t, 3>{665, 328, 7});
  CHECK(s.counts[static_cast<int>(ResponseClass::non_numerical)] == expected[0]);
  CHECK(s.counts[static_cast<int>(ResponseClass::numerical_incorrect)] == expected[1]);
  CHECK(s.counts[static_cast<int>(ResponseClass::correct)] == expected[2]);

  // The per-digit buckets partition the responses.
  std::size_t total = 0;
  for (const auto& [digits, bucket] : s.by_digits) {
    CHECK(digits >= 1);
    CHECK(digits <= 100);
    total += bucket.n;
    CHECK(bucket.counts[0] + bucket.counts[1] + bucket.counts[2] == bucket.n);
  }
  CHECK(total == 1000);

  // A limit replays a prefix.
  CHECK(probe_replay(fixture, {}, 100).size() == 100);
  CHECK(probe_replay(fixture, {}, 100)[99].prompt_id == fixture[99].prompt_id);
}

TEST_CASE("fixtures without prompt text are matched to prompts by id") {
  const auto prompts = render_prompts(gen_large_digit_pairs(3, 5, 2));
  std::vector<FixtureRecord> fixture(2);
  fixture[0].prompt_id = 2;
  fixture[0].raw_completion = prompts[2].truth;
  fixture[1].prompt_id = 0;
  fixture[1].failed = true;
  fixture[1].error = "timeout";
  const auto r = probe_replay(fixture, prompts);
  CHECK(r[0].classification.cls == ResponseClass::correct);
  CHECK(r[0].prompt == prompts[2].text);
  CHECK(r[1].failed);
  const auto s = summarize(r);
  CHECK(s.n_failed == 1);
  CHECK(s.n_responses == 1);  // failed requests are counted separately

  fixture[0].prompt_id = 7;
  CHECK_THROWS(probe_replay(fixture, prompts));
}

TEST_CASE("malformed fixture lines are reported with their line number") {
  const auto path = std::filesystem::temp_directory_path() / "extralab_bad_fixture.jsonl";
  std::ofstream(path) << "{\"prompt_id\": 0, \"raw_completion\": \"1\"}\n{not json\n";
  try {
    (void)read_fixture(path);
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST_CASE("request bodies carry the sampling parameters") {
  const auto body = completion_request_body("What is 1 + 2?", SamplingParams{}, "neox");
  CHECK(body.at("prompt") == "What is 1 + 2?");
  CHECK(body.at("max_tokens") == 105);
  CHECK(body.at("temperature") == 0.1);
  CHECK(body.at("top_p") == 0.0);
  CHECK(body.at("top_k") == 0);
  CHECK(body.at("n") == 10);
  CHECK(body.at("model") == "neox");
  CHECK(!completion_request_body("x", SamplingParams{}).contains("model"));

  CHECK(parse_completion_body(R"({"choices":[{"text":"a"},{"text":"b"}]})") == std::vector<std::string>{"a", "b"});
  CHECK(parse_completion_body(R"({"completions":["c"]})") == std::vector<std::string>{"c"});
  CHECK(parse_completion_body(R"({"text":"d"})") == std::vector<std::string>{"d"});
  CHECK_THROWS_AS(parse_completion_body("{}"), CompletionError);
}

TEST_CASE("live probing against a local server retries transient failures") {
  httplib::Server server;
  std::mutex mu;
  std::map<std::string, int> attempts;
  std::vector<nlohmann::json> bodies;
  server.Post("/v1/completions", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    const auto prompt = body.at("prompt").get<std::string>();
    int attempt;
    {
      std::lock_guard<std::mutex> lock(mu);
      attempt = ++attempts[prompt];
      bodies.push_back(body);
    }
    if (attempt == 1) {
      res.status = 503;
      return;
    }
    const auto ab = *parse_prompt(prompt);
    const auto truth = make_prompt(0, ab.first, ab.second).truth;
    nlohmann::json out;
    out["choices"] = nlohmann::json::array();
    for (int i = 0; i < body.at("n").get<int>(); ++i) out["choices"].push_back({{"text", " " + truth}});
    res.set_content(out.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  EndpointConfig ep;
  ep.url = "http://127.0.0.1:" + std::to_string(port) + "/v1/completions";
  auto client = make_http_client(ep);
  const auto prompts = render_prompts(gen_large_digit_pairs(6, 30, 4));
  LiveOptions opts;
  opts.max_in_flight = 3;
  std::atomic<int> sleeps{0};
  opts.sleep = [&](std::chrono::milliseconds) { ++sleeps; };
  const auto log = std::filesystem::temp_directory_path() / "extralab_live_raw.jsonl";
  std::filesystem::remove(log);
  const auto responses = probe_live(*client, prompts, SamplingParams{}, opts, log);
  server.stop();
  th.join();

  REQUIRE(responses.size() == 6);
  for (const auto& r : responses) {
    CHECK(!r.failed);
    CHECK(r.classification.cls == ResponseClass::correct);
  }
  CHECK(sleeps.load() == 6);  // one backoff per prompt
  for (const auto& [prompt, n] : attempts) CHECK(n == 2);
  for (const auto& b : bodies) {
    CHECK(b.at("max_tokens") == 105);
    CHECK(b.at("temperature") == 0.1);
    CHECK(b.at("n") == 10);
  }
  // The raw log replays to the same summary.
  const auto replayed = probe_replay(read_fixture(log), prompts);
  CHECK(summary_json(summarize(replayed), SamplingParams{}) == summary_json(summarize(responses), SamplingParams{}));
  std::filesystem::remove(log);
}

TEST_CASE("permanent failures are recorded without retrying") {
  struct Refusing : CompletionClient {
    std::atomic<int> calls{0};
    std::vector<std::string> complete(const std::string&, const SamplingParams&) override {
      ++calls;
      throw CompletionError("HTTP 401", false);
    }
  } client;
  const auto prompts = render_prompts(gen_large_digit_pairs(2, 3, 1));
  LiveOptions opts;
  opts.sleep = [](std::chrono::milliseconds) {};
  const auto log = std::filesystem::temp_directory_path() / "extralab_live_fail.jsonl";
  std::filesystem::remove(log);
  const auto r = probe_live(client, prompts, SamplingParams{}, opts, log);
  CHECK(client.calls.load() == 2);
  CHECK(r[0].failed);
  CHECK(r[0].error.find("401") != std::string::npos);
  std::filesystem::remove(log);
}

TEST_CASE("a missing endpoint gives an actionable error") {
  ::unsetenv(kEndpointEnv);
  try {
    (void)endpoint_from_env();
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find(kEndpointEnv) != std::string::npos);
  }
}

TEST_CASE("named classification and prompt-count examples") {
  CHECK(cls("The answer is 19", "19") == ResponseClass::non_numerical);
  const auto prompts = render_prompts(gen_large_digit_pairs(100000, 100, 0));
  CHECK(prompts.size() == 100000);
  CHECK(prompts.back().id == 99999);
}
