#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "ponte/backend/batch.hpp"
#include "ponte/clustering.hpp"
#include "ponte/harness/records.hpp"
#include "ponte/metrics.hpp"
#include "ponte/prompting.hpp"

namespace ponte {

inline const std::vector<std::uint64_t> kDefaultSeeds{0, 1, 2, 3, 4};

struct CstsItem {
  std::string text1;
  std::string text2;
  std::string condition;
  double gold = 0.0;
  double prediction = 0.0;  // cosine similarity
  double scaled = 0.0;      // prediction min-max scaled to [0.5, 5.5]
  std::optional<std::string> word1;
  std::optional<std::string> word2;
};

struct CstsEvalResult {
  std::string template_id;
  std::string model_id;
  std::vector<CstsItem> items;
  CorrelationReport correlation;
};

namespace detail {

inline void require_varied_gold(const std::vector<CstsRecord> &records) {
  if (records.size() < 2) fail(ErrorCode::EmptyInput, "at least two records are needed for a correlation");
  const auto [lo, hi] = std::minmax_element(records.begin(), records.end(),
                                            [](const auto &a, const auto &b) { return a.gold < b.gold; });
  if (lo->gold == hi->gold) {
    fail(ErrorCode::ZeroVariance, "all " + std::to_string(records.size()) + " gold scores equal " +
                                      std::to_string(lo->gold) +
                                      "; correlation is undefined, evaluate a split with varied scores");
  }
}

/// Shared by csts_eval and template_search; unconditional templates ignore
/// the record's condition.
inline CstsEvalResult run_csts(const std::vector<CstsRecord> &records, const PromptTemplate &tmpl,
                               EmbeddingBackend &backend, EmbeddingCache *cache) {
  require_varied_gold(records);
  std::vector<ConditionalPrompt> prompts;
  prompts.reserve(records.size() * 2);
  for (const auto &r : records) {
    const std::string_view condition = tmpl.requires_condition ? std::string_view(r.condition) : std::string_view();
    prompts.push_back(render(tmpl, r.text1, condition));
    prompts.push_back(render(tmpl, r.text2, condition));
  }
  const auto embedded = embed_batch(backend, prompts, cache);

  CstsEvalResult result;
  result.template_id = tmpl.id;
  result.model_id = backend.model_id();
  std::vector<double> predictions, gold;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto &a = embedded[2 * i];
    const auto &b = embedded[2 * i + 1];
    CstsItem item;
    item.text1 = records[i].text1;
    item.text2 = records[i].text2;
    item.condition = tmpl.requires_condition ? records[i].condition : std::string();
    item.gold = records[i].gold;
    item.prediction = cosine(a.embedding, b.embedding);
    item.word1 = a.generated_word;
    item.word2 = b.generated_word;
    predictions.push_back(item.prediction);
    gold.push_back(item.gold);
    result.items.push_back(std::move(item));
  }
  const auto scaled = min_max_scale(predictions);
  for (std::size_t i = 0; i < scaled.size(); ++i) result.items[i].scaled = scaled[i];

  try {
    result.correlation = correlate(predictions, gold);
  } catch (const Error &e) {
    if (e.code() != ErrorCode::ZeroVariance) throw;
    fail(ErrorCode::ZeroVariance, "template " + tmpl.id +
                                      " gives the same similarity for every pair; correlation is undefined");
  }
  return result;
}

}  // namespace detail

/// Cosine similarity of the two conditional embeddings of each pair, scored
/// by Spearman and Pearson correlation against gold.
inline CstsEvalResult csts_eval(const std::vector<CstsRecord> &records, const PromptTemplate &tmpl,
                                EmbeddingBackend &backend, EmbeddingCache *cache) {
  if (!tmpl.requires_condition) {
    fail(ErrorCode::InvalidArgument, "template " + tmpl.id + " has no {condition} slot; use template-search to "
                                                             "compare unconditional baselines");
  }
  return detail::run_csts(records, tmpl, backend, cache);
}

struct ClusterItem {
  std::string text;
  std::string label;
  std::optional<std::string> word;
};

struct ClusterEvalResult {
  std::string template_id;
  std::string model_id;
  std::string condition;
  std::size_t k = 0;
  std::vector<ClusterItem> items;
  MultiSeedReport clustering;
};

/// Embeds each text under one shared condition and averages V-measure over
/// k-means runs with the given seeds. k defaults to the gold label count.
inline ClusterEvalResult cluster_eval(const std::vector<ClusterRecord> &records, const PromptTemplate &tmpl,
                                      const std::string &condition, EmbeddingBackend &backend, EmbeddingCache *cache,
                                      std::optional<std::size_t> k = std::nullopt,
                                      const std::vector<std::uint64_t> &seeds = kDefaultSeeds) {
  if (records.empty()) fail(ErrorCode::EmptyInput, "clustering corpus is empty");
  const std::size_t clusters = k.value_or(label_count(records));
  if (clusters == 0 || clusters > records.size()) {
    fail(ErrorCode::KTooLarge, "k=" + std::to_string(clusters) + " with " + std::to_string(records.size()) + " texts");
  }

  std::vector<ConditionalPrompt> prompts;
  prompts.reserve(records.size());
  for (const auto &r : records) prompts.push_back(render(tmpl, r.text, condition));
  const auto embedded = embed_batch(backend, prompts, cache);

  ClusterEvalResult result;
  result.template_id = tmpl.id;
  result.model_id = backend.model_id();
  result.condition = condition;
  result.k = clusters;
  std::vector<EmbeddingVector> points;
  std::vector<std::string> gold;
  for (std::size_t i = 0; i < records.size(); ++i) {
    result.items.push_back({records[i].text, records[i].label, embedded[i].generated_word});
    points.push_back(embedded[i].embedding);
    gold.push_back(records[i].label);
  }
  result.clustering = multi_seed_cluster(points, gold, clusters, seeds);
  return result;
}

struct TemplateSearchRow {
  std::string template_id;
  double spearman_rho = 0.0;
  double pearson_r = 0.0;
  bool selected = false;
};

struct TemplateSearchResult {
  std::vector<TemplateSearchRow> ranking;  // best first
  std::vector<CstsEvalResult> runs;        // input template order
};

/// Validation-set template selection: highest Spearman wins, ties go to the
/// earlier template.
inline TemplateSearchResult template_search(const std::vector<CstsRecord> &records,
                                            const std::vector<PromptTemplate> &templates, EmbeddingBackend &backend,
                                            EmbeddingCache *cache) {
  if (templates.empty()) fail(ErrorCode::EmptyInput, "no templates to search");
  detail::require_varied_gold(records);
  TemplateSearchResult result;
  for (const auto &tmpl : templates) {
    result.runs.push_back(detail::run_csts(records, tmpl, backend, cache));
    const auto &c = result.runs.back().correlation;
    result.ranking.push_back({tmpl.id, c.spearman_rho, c.pearson_r, false});
  }
  std::stable_sort(result.ranking.begin(), result.ranking.end(),
                   [](const auto &a, const auto &b) { return a.spearman_rho > b.spearman_rho; });
  result.ranking.front().selected = true;
  return result;
}

struct ConditionSearchRow {
  std::string condition;
  double v_measure = 0.0;
  bool selected = false;
};

struct ConditionSearchResult {
  std::vector<ConditionSearchRow> ranking;  // best first
  std::vector<ClusterEvalResult> runs;      // input condition order
};

/// Picks the conditional text with the highest mean V-measure; ties go to the
/// earlier condition.
inline ConditionSearchResult condition_search(const std::vector<ClusterRecord> &records, const PromptTemplate &tmpl,
                                              const std::vector<std::string> &conditions, EmbeddingBackend &backend,
                                              EmbeddingCache *cache, std::optional<std::size_t> k = std::nullopt,
                                              const std::vector<std::uint64_t> &seeds = kDefaultSeeds) {
  if (conditions.empty()) fail(ErrorCode::EmptyInput, "no conditions to search");
  ConditionSearchResult result;
  for (const auto &condition : conditions) {
    result.runs.push_back(cluster_eval(records, tmpl, condition, backend, cache, k, seeds));
    result.ranking.push_back({condition, result.runs.back().clustering.mean.v_measure, false});
  }
  std::stable_sort(result.ranking.begin(), result.ranking.end(),
                   [](const auto &a, const auto &b) { return a.v_measure > b.v_measure; });
  result.ranking.front().selected = true;
  return result;
}

}  // namespace ponte
