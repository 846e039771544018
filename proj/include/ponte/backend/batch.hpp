#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ponte/backend/cache.hpp"
#include "ponte/backend/embedding.hpp"
#include "ponte/backend/http.hpp"
#include "ponte/backend/mock.hpp"

namespace ponte {

inline std::unique_ptr<EmbeddingBackend> make_backend(const BackendConfig &config,
                                                      std::optional<MixPlan> mix = std::nullopt) {
  if (config.endpoint == "mock") {
    if (mix) return std::make_unique<MixedMockBackend>(config, std::move(*mix));
    return std::make_unique<MockBackend>(config);
  }
  if (mix) fail(ErrorCode::InvalidArgument, "a mix plan only applies to the mock backend");
  return std::make_unique<HttpBackend>(config);
}

namespace detail {

inline void check_result(const EmbedResult &result) {
  if (result.embedding.dim() == 0) fail(ErrorCode::ProtocolError, "empty embedding");
  if (!result.embedding.all_finite()) fail(ErrorCode::ProtocolError, "embedding has non-finite entries");
  if (result.generated_word && result.generated_word->find('"') != std::string::npos) {
    fail(ErrorCode::ProtocolError, "generated word contains a double quote");
  }
}

}  // namespace detail

/// Single prompt, no cache.
inline EmbedResult embed(EmbeddingBackend &backend, const ConditionalPrompt &prompt) {
  if (prompt.rendered.empty()) fail(ErrorCode::EmptyText, "rendered prompt is empty");
  auto result = backend.embed(prompt);
  detail::check_result(result);
  return result;
}

struct BatchStats {
  std::size_t cache_hits = 0;
  std::size_t backend_calls = 0;
};

/// Embeds every prompt, positionally aligned with the input. Identical
/// prompts are fetched once, the cache is consulted first, and at most
/// `max_parallel_requests` backend calls run at a time. On failure the error
/// of the lowest failing position is rethrown with that position attached.
inline std::vector<EmbedResult> embed_batch(EmbeddingBackend &backend, const std::vector<ConditionalPrompt> &prompts,
                                            EmbeddingCache *cache, BatchStats *stats = nullptr) {
  if (prompts.empty()) fail(ErrorCode::EmptyBatch, "no prompts to embed");
  const auto &config = backend.config();
  const std::string model_id = backend.model_id();

  // unique prompt -> first position
  std::vector<std::size_t> slot_of(prompts.size());
  std::vector<std::size_t> first_position;
  std::vector<CacheKey> keys;
  std::map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    if (prompts[i].rendered.empty()) fail(ErrorCode::EmptyText, "prompt #" + std::to_string(i) + " is empty");
    auto key = CacheKey::make(model_id, config.layer_index, prompts[i].rendered);
    auto [it, inserted] = seen.try_emplace(key.digest, first_position.size());
    if (inserted) {
      first_position.push_back(i);
      keys.push_back(std::move(key));
    }
    slot_of[i] = it->second;
  }

  const std::size_t unique = first_position.size();
  std::vector<std::optional<EmbedResult>> results(unique);
  std::vector<std::size_t> misses;
  BatchStats local;
  for (std::size_t u = 0; u < unique; ++u) {
    if (cache) {
      auto hit = cache->load(keys[u]);
      if (hit && (!config.generate_words || hit->generated_word)) {
        if (!config.generate_words) hit->generated_word.reset();
        results[u] = std::move(hit);
        ++local.cache_hits;
        continue;
      }
    }
    misses.push_back(u);
  }

  std::vector<std::exception_ptr> errors(unique);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t m = next++; m < misses.size(); m = next++) {
      const std::size_t u = misses[m];
      try {
        auto result = backend.embed(prompts[first_position[u]]);
        detail::check_result(result);
        results[u] = std::move(result);
      } catch (...) {
        errors[u] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min(config.max_parallel_requests, misses.size());
  if (workers == 1) {
    worker();
  } else if (workers > 1) {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  local.backend_calls = misses.size();

  if (cache) {
    for (auto u : misses) {
      if (results[u]) cache->store(keys[u], *results[u]);
    }
  }

  for (std::size_t i = 0; i < prompts.size(); ++i) {
    const auto &error = errors[slot_of[i]];
    if (!error) continue;
    try {
      std::rethrow_exception(error);
    } catch (const Error &e) {
      throw Error(e.code(), "prompt #" + std::to_string(i) + ": " + e.message());
    } catch (const std::exception &e) {
      throw Error(ErrorCode::ProtocolError, "prompt #" + std::to_string(i) + ": " + e.what());
    }
  }

  const std::size_t dim = results[0]->embedding.dim();
  std::vector<EmbedResult> out;
  out.reserve(prompts.size());
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    const auto &r = *results[slot_of[i]];
    if (r.embedding.dim() != dim) {
      fail(ErrorCode::DimensionMismatch, "prompt #" + std::to_string(i) + " has dimension " +
                                             std::to_string(r.embedding.dim()) + ", expected " + std::to_string(dim));
    }
    out.push_back(r);
  }
  if (stats) *stats = local;
  return out;
}

}  // namespace ponte
