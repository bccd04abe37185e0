// Copyright 2026 The extralab Authors
// SPDX-License-Identifier: Apache-2.0

#include <httplib.h>

#include "extralab/llmprobe.hpp"

namespace extralab {
namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("endpoint URL lacks a scheme: " + url);
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw std::invalid_argument("endpoint scheme must be http or https: " + url);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") throw std::invalid_argument("this build has no TLS support; use an http:// endpoint");
#endif
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl p;
  p.origin = url.substr(0, path_start);
  p.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (p.origin.size() <= scheme_end + 3) throw std::invalid_argument("endpoint URL lacks a host: " + url);
  return p;
}

class HttpCompletionClient final : public CompletionClient {
 public:
  explicit HttpCompletionClient(EndpointConfig cfg) : cfg_(std::move(cfg)), url_(split_url(cfg_.url)) {}

  std::vector<std::string> complete(const std::string& prompt, const SamplingParams& params) override {
    // One client per request keeps concurrent workers independent.
    httplib::Client client(url_.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout).count();
    client.set_connection_timeout(secs);
    client.set_read_timeout(secs);
    client.set_write_timeout(secs);
    httplib::Headers headers;
    if (!cfg_.token.empty()) headers.emplace("Authorization", "Bearer " + cfg_.token);
    const auto body = completion_request_body(prompt, params, cfg_.model).dump();
    const auto res = client.Post(url_.path, headers, body, "application/json");
    if (!res) throw CompletionError("request failed: " + httplib::to_string(res.error()), true);
    const int status = res->status;
    if (status == 408 || status == 429 || status >= 500) {
      throw CompletionError("endpoint returned HTTP " + std::to_string(status), true);
    }
    if (status < 200 || status >= 300) {
      throw CompletionError("endpoint returned HTTP " + std::to_string(status) + ": " + res->body.substr(0, 200), false);
    }
    return parse_completion_body(res->body);
  }

 private:
  EndpointConfig cfg_;
  ParsedUrl url_;
};

}  // namespace

std::unique_ptr<CompletionClient> make_http_client(const EndpointConfig& endpoint) {
  return std::make_unique<HttpCompletionClient>(endpoint);
}

}  // namespace extralab
