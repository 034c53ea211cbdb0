/*
 * Copyright 2026 The lithoflow Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdlib>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "lithoflow/reasoning.hpp"

namespace lithoflow {

inline nlohmann::json chat_body(const RemoteConfig& cfg, const ReasonerRequest& req) {
  return {{"model", cfg.model},
          {"messages",
           nlohmann::json::array(
               {{{"role", "system"},
                 {"content", "You are a petrophysicist labeling lithology from well logs."}},
                {{"role", "user"}, {"content", render_prompt(req)}}})},
          {"temperature", cfg.temperature}};
}

// Accepts chat-completion style {choices:[{message:{content}}]} or {text}.
inline ReasonerResponse parse_chat_payload(const std::string& body, std::size_t length,
                                           std::size_t num_classes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("reasoner payload is not JSON: ") + e.what());
  }
  std::string text;
  if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty() &&
      j["choices"][0].contains("message") && j["choices"][0]["message"].contains("content") &&
      j["choices"][0]["message"]["content"].is_string()) {
    text = j["choices"][0]["message"]["content"].get<std::string>();
  } else if (j.contains("text") && j["text"].is_string()) {
    text = j["text"].get<std::string>();
  } else {
    fail(ErrorCode::ParseError, "reasoner payload has no text field");
  }
  auto resp = parse_labeled_reply(text);
  validate_response(resp, length, num_classes);
  return resp;
}

class RemoteReasoner final : public Reasoner {
 public:
  explicit RemoteReasoner(RemoteConfig cfg) : cfg_(std::move(cfg)) {
    const auto scheme_end = cfg_.url.find("://");
    require(scheme_end != std::string::npos, ErrorCode::Config, "remote url needs a scheme: " + cfg_.url);
    const auto path_start = cfg_.url.find('/', scheme_end + 3);
    origin_ = cfg_.url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : cfg_.url.substr(path_start);
  }

  ReasonerResponse reason(const ReasonerRequest& request, std::uint64_t) const override {
    httplib::Client client(origin_);
    client.set_connection_timeout(cfg_.timeout_s, 0);
    client.set_read_timeout(cfg_.timeout_s, 0);
    client.set_write_timeout(cfg_.timeout_s, 0);
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
    const std::string body = chat_body(cfg_, request).dump();

    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
      auto res = client.Post(path_, headers, body, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        last_error = "HTTP status " + std::to_string(res->status);
        continue;
      }
      return parse_chat_payload(res->body, request.length, request.num_classes);
    }
    fail(ErrorCode::Transport, "remote reasoner failed: " + last_error);
  }

  std::string name() const override { return "remote"; }

 private:
  RemoteConfig cfg_;
  std::string origin_;
  std::string path_;
};

}  // namespace lithoflow
