#pragma once

#include <atomic>
#include <cfloat>
#include <cmath>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "ponte/backend/embedding.hpp"

namespace ponte {

struct Endpoint {
  std::string scheme_host_port;  // e.g. "http://localhost:8000"
  std::string base_path;         // "" or "/v1", never a trailing slash

  static Endpoint parse(const std::string &url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos || url.substr(0, scheme_end) != "http") {
      fail(ErrorCode::InvalidArgument, "backend URL must start with http:// (got '" + url + "')");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    Endpoint ep;
    ep.scheme_host_port = url.substr(0, path_start);
    if (ep.scheme_host_port.size() == scheme_end + 3) fail(ErrorCode::InvalidArgument, "backend URL has no host");
    if (path_start != std::string::npos) {
      ep.base_path = url.substr(path_start);
      while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();
    }
    return ep;
  }
};

/// Builds the `/embed` request body.
inline nlohmann::ordered_json embed_request(const BackendConfig &config, const ConditionalPrompt &prompt) {
  return {{"prompt", prompt.rendered},
          {"layer_index", config.layer_index},
          {"generate_word", config.generate_words},
          {"max_word_tokens", config.max_word_tokens}};
}

/// Validates and converts an `/embed` response body.
inline EmbedResult parse_embed_response(const std::string &body, const BackendConfig &config) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error &e) {
    fail(ErrorCode::ProtocolError, std::string("response is not JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::ProtocolError, "response is not a JSON object");

  const auto need = [&](const char *key) -> const nlohmann::json & {
    if (!j.contains(key)) fail(ErrorCode::ProtocolError, std::string("response lacks '") + key + "'");
    return j.at(key);
  };

  const auto &embedding = need("embedding");
  const auto &hidden_size = need("hidden_size");
  const auto &model_id = need("model_id");
  if (!embedding.is_array() || embedding.empty()) fail(ErrorCode::ProtocolError, "'embedding' must be a non-empty array");
  if (!hidden_size.is_number_integer()) fail(ErrorCode::ProtocolError, "'hidden_size' must be an integer");
  if (!model_id.is_string()) fail(ErrorCode::ProtocolError, "'model_id' must be a string");
  if (hidden_size.get<long long>() != static_cast<long long>(embedding.size())) {
    fail(ErrorCode::ProtocolError, "embedding length " + std::to_string(embedding.size()) +
                                       " disagrees with hidden_size " + hidden_size.dump());
  }

  EmbedResult result;
  result.model_id = model_id.get<std::string>();
  result.layer_index = config.layer_index;
  if (!config.model_id.empty() && result.model_id != config.model_id) {
    fail(ErrorCode::ProtocolError, "backend serves '" + result.model_id + "', expected '" + config.model_id + "'");
  }
  result.embedding.values.reserve(embedding.size());
  for (const auto &v : embedding) {
    if (!v.is_number()) fail(ErrorCode::ProtocolError, "non-numeric embedding entry");
    const double x = v.get<double>();
    if (!std::isfinite(x) || std::abs(x) > FLT_MAX) fail(ErrorCode::ProtocolError, "non-finite embedding entry");
    result.embedding.values.push_back(static_cast<float>(x));
  }

  if (j.contains("generated_word") && !j.at("generated_word").is_null()) {
    if (!j.at("generated_word").is_string()) fail(ErrorCode::ProtocolError, "'generated_word' must be a string");
    auto word = j.at("generated_word").get<std::string>();
    if (word.find('"') != std::string::npos) fail(ErrorCode::ProtocolError, "generated word contains a double quote");
    if (config.generate_words) result.generated_word = std::move(word);
  }
  return result;
}

/// Client for an inference service that speaks the `/embed` protocol.
class HttpBackend : public EmbeddingBackend {
 public:
  explicit HttpBackend(BackendConfig config) : config_(std::move(config)), endpoint_(Endpoint::parse(config_.endpoint)) {
    validate(config_);
    if (config_.model_id.empty()) {
      fail(ErrorCode::InvalidArgument, "a model id is required for remote backends (it keys the cache)");
    }
  }

  EmbedResult embed(const ConditionalPrompt &prompt) override {
    if (prompt.rendered.empty()) fail(ErrorCode::EmptyText, "rendered prompt is empty");
    httplib::Client client(endpoint_.scheme_host_port);
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(config_.request_timeout);
    const auto sec = static_cast<time_t>(timeout.count() / 1000000);
    const auto usec = static_cast<time_t>(timeout.count() % 1000000);
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);

    auto res = client.Post(endpoint_.base_path + "/embed", embed_request(config_, prompt).dump(), "application/json");
    if (!res) {
      fail(ErrorCode::BackendUnreachable,
           config_.endpoint + ": " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      std::string detail = res->body;
      try {
        detail = nlohmann::json::parse(res->body).at("error").get<std::string>();
      } catch (const nlohmann::json::exception &) {
      }
      fail(ErrorCode::BackendRejected, "HTTP " + std::to_string(res->status) + ": " + detail);
    }

    auto result = parse_embed_response(res->body, config_);
    std::size_t expected = 0;
    const std::size_t dim = result.embedding.dim();
    if (!dim_.compare_exchange_strong(expected, dim) && expected != dim) {
      fail(ErrorCode::DimensionMismatch,
           "backend returned dimension " + std::to_string(dim) + " after " + std::to_string(expected));
    }
    return result;
  }

  const BackendConfig &config() const override { return config_; }
  std::string model_id() const override { return config_.model_id; }

 private:
  BackendConfig config_;
  Endpoint endpoint_;
  std::atomic<std::size_t> dim_{0};
};

}  // namespace ponte
