#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ponte/backend/digest.hpp"
#include "ponte/backend/embedding.hpp"
#include "ponte/random.hpp"

namespace ponte {

/// Hermetic stand-in for a language model. The vector is a seeded standard
/// normal draw keyed by SHA-256(seed, rendered prompt), L2-normalised; the
/// word is the first eight hex digits of that hash.
inline EmbedResult mock_embed(const ConditionalPrompt &prompt, std::size_t dim, std::uint64_t seed) {
  if (dim < 2) fail(ErrorCode::InvalidArgument, "mock embedding dimension must be >= 2");
  const Sha256 digest = Sha256Builder().bytes("ponte-mock-v1").u64(seed).field(prompt.rendered).finish();

  CounterRng rng(leading_u64(digest));
  std::vector<double> draws(dim);
  double norm = 0.0;
  for (double &v : draws) {
    v = rng.normal();
    norm += v * v;
  }
  norm = std::sqrt(norm);

  EmbedResult result;
  result.embedding.values.reserve(dim);
  for (double v : draws) result.embedding.values.push_back(static_cast<float>(v / norm));
  result.generated_word = to_hex(digest).substr(0, 8);
  result.model_id = "mock";
  return result;
}

class MockBackend : public EmbeddingBackend {
 public:
  explicit MockBackend(BackendConfig config) : config_(std::move(config)) {
    validate(config_);
    if (config_.mock_dim < 2) fail(ErrorCode::InvalidArgument, "mock embedding dimension must be >= 2");
    model_id_ = config_.model_id.empty()
                    ? "mock-d" + std::to_string(config_.mock_dim) + "-s" + std::to_string(config_.mock_seed)
                    : config_.model_id;
  }

  EmbedResult embed(const ConditionalPrompt &prompt) override {
    auto result = mock_embed(prompt, config_.mock_dim, config_.mock_seed);
    return finish(std::move(result));
  }

  const BackendConfig &config() const override { return config_; }
  std::string model_id() const override { return model_id_; }

 protected:
  EmbedResult finish(EmbedResult result) const {
    result.model_id = model_id_;
    result.layer_index = config_.layer_index;
    if (!config_.generate_words) result.generated_word.reset();
    return result;
  }

  BackendConfig config_;
  std::string model_id_;
};

/// Places a prompt's embedding at a chosen center. Optional fields match any
/// value.
struct MixRule {
  std::string text;
  std::optional<std::string> condition;
  std::optional<std::string> template_id;
  std::vector<double> center;

  bool matches(const ConditionalPrompt &prompt) const {
    return prompt.text == text && (!condition || *condition == prompt.condition) &&
           (!template_id || *template_id == prompt.template_id);
  }
};

struct MixPlan {
  double epsilon = 0.01;
  std::vector<MixRule> rules;
};

inline void to_json(nlohmann::ordered_json &j, const MixRule &rule) {
  j = nlohmann::ordered_json{{"text", rule.text}};
  if (rule.condition) j["condition"] = *rule.condition;
  if (rule.template_id) j["template"] = *rule.template_id;
  j["center"] = rule.center;
}

inline nlohmann::ordered_json mix_plan_to_json(const MixPlan &plan) {
  nlohmann::ordered_json rules = nlohmann::ordered_json::array();
  for (const auto &r : plan.rules) rules.push_back(r);
  return {{"epsilon", plan.epsilon}, {"rules", rules}};
}

inline MixPlan mix_plan_from_json(const nlohmann::json &j) {
  try {
    MixPlan plan;
    plan.epsilon = j.value("epsilon", 0.01);
    for (const auto &r : j.at("rules")) {
      MixRule rule;
      rule.text = r.at("text").get<std::string>();
      if (r.contains("condition")) rule.condition = r.at("condition").get<std::string>();
      if (r.contains("template")) rule.template_id = r.at("template").get<std::string>();
      rule.center = r.at("center").get<std::vector<double>>();
      plan.rules.push_back(std::move(rule));
    }
    return plan;
  } catch (const nlohmann::json::exception &e) {
    fail(ErrorCode::ParseError, std::string("mix plan: ") + e.what());
  }
}

inline MixPlan load_mix_plan(const std::string &path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open mix plan " + path);
  try {
    return mix_plan_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error &e) {
    fail(ErrorCode::ParseError, "mix plan " + path + ": " + e.what());
  }
}

/// Mock backend with controllable geometry: prompts matching a rule embed at
/// `center + epsilon * mock_embed(prompt)`, everything else at the plain mock
/// vector.
class MixedMockBackend : public MockBackend {
 public:
  MixedMockBackend(BackendConfig config, MixPlan plan) : MockBackend(std::move(config)), plan_(std::move(plan)) {
    for (const auto &rule : plan_.rules) {
      if (rule.center.size() != config_.mock_dim) {
        fail(ErrorCode::DimensionMismatch, "mix center for '" + rule.text + "' has dimension " +
                                               std::to_string(rule.center.size()) + ", backend has " +
                                               std::to_string(config_.mock_dim));
      }
    }
    if (config_.model_id.empty()) {
      const auto plan_hash = to_hex(Sha256Builder().field(mix_plan_to_json(plan_).dump()).finish());
      model_id_ += "-mix" + plan_hash.substr(0, 12);
    }
  }

  EmbedResult embed(const ConditionalPrompt &prompt) override {
    auto result = mock_embed(prompt, config_.mock_dim, config_.mock_seed);
    for (const auto &rule : plan_.rules) {
      if (!rule.matches(prompt)) continue;
      auto &values = result.embedding.values;
      for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = static_cast<float>(rule.center[i] + plan_.epsilon * static_cast<double>(values[i]));
      }
      break;
    }
    return finish(std::move(result));
  }

  const MixPlan &plan() const { return plan_; }

 private:
  MixPlan plan_;
};

}  // namespace ponte
