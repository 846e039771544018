#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ponte/error.hpp"
#include "ponte/prompting.hpp"

namespace ponte {

/// Dense conditional text embedding. Stored as float32, which is also the
/// on-disk cache precision, so cached and fresh results compare bit-equal.
struct EmbeddingVector {
  std::vector<float> values;

  std::size_t dim() const { return values.size(); }
  std::size_t size() const { return values.size(); }
  auto begin() const { return values.begin(); }
  auto end() const { return values.end(); }

  bool all_finite() const {
    for (float v : values) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const EmbeddingVector &, const EmbeddingVector &) = default;
};

struct EmbedResult {
  EmbeddingVector embedding;
  std::optional<std::string> generated_word;
  std::string model_id;
  int layer_index = -1;

  friend bool operator==(const EmbedResult &, const EmbedResult &) = default;
};

struct BackendConfig {
  std::string endpoint = "mock";  // base URL, or "mock"
  std::string model_id;
  int layer_index = -1;  // negative indexes from the final layer
  std::chrono::milliseconds request_timeout{60000};
  std::size_t max_parallel_requests = 4;
  bool generate_words = false;
  std::size_t max_word_tokens = 16;

  // mock backend only
  std::size_t mock_dim = 64;
  std::uint64_t mock_seed = 0;
};

inline void validate(const BackendConfig &config) {
  if (config.max_parallel_requests < 1) fail(ErrorCode::InvalidArgument, "max_parallel_requests must be >= 1");
  if (config.max_word_tokens < 1) fail(ErrorCode::InvalidArgument, "max_word_tokens must be >= 1");
  if (config.request_timeout.count() <= 0) fail(ErrorCode::InvalidArgument, "request timeout must be positive");
}

/// Anything that turns a rendered prompt into an embedding. Implementations
/// must be safe to call from several threads at once.
class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;

  virtual EmbedResult embed(const ConditionalPrompt &prompt) = 0;
  virtual const BackendConfig &config() const = 0;
  /// Identity used in cache keys; fixed for the backend's lifetime.
  virtual std::string model_id() const = 0;
};

}  // namespace ponte
