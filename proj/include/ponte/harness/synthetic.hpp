#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "ponte/backend/mock.hpp"
#include "ponte/harness/records.hpp"

namespace ponte {

/// Corpus plus the mix plan that gives it a known geometry under the mock
/// backend.
template <typename Record>
struct SyntheticCorpus {
  std::vector<Record> records;
  MixPlan plan;
};

/// C-STS pairs whose conditional cosine is a strictly decreasing function of
/// the angle between the two centers, and the angle strictly decreases with
/// gold, so cosine ranks follow gold ranks exactly. Golds are spread evenly
/// over [1, 5]; angles over [0, pi]. Rules are restricted to `template_id`
/// when given.
inline SyntheticCorpus<CstsRecord> rank_aligned_csts(std::size_t pairs, std::size_t dim,
                                                     std::optional<std::string> template_id = std::nullopt,
                                                     const std::string &condition = "the aspect",
                                                     double epsilon = 0.01) {
  if (pairs < 2) fail(ErrorCode::InvalidArgument, "need at least two pairs");
  if (dim < 2) fail(ErrorCode::InvalidArgument, "need dim >= 2");
  SyntheticCorpus<CstsRecord> out;
  out.plan.epsilon = epsilon;
  for (std::size_t i = 0; i < pairs; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(pairs - 1);
    CstsRecord r;
    r.text1 = "pair " + std::to_string(i) + " first text";
    r.text2 = "pair " + std::to_string(i) + " second text";
    r.condition = condition;
    r.gold = 1.0 + 4.0 * t;
    r.split = Split::Validation;

    const double angle = std::numbers::pi * (1.0 - t);
    std::vector<double> first(dim, 0.0), second(dim, 0.0);
    first[0] = 1.0;
    second[0] = std::cos(angle);
    second[1] = std::sin(angle);
    out.plan.rules.push_back({r.text1, condition, template_id, first});
    out.plan.rules.push_back({r.text2, condition, template_id, second});
    out.records.push_back(std::move(r));
  }
  return out;
}

/// Texts whose embeddings sit at `separation * e_label` (plus epsilon-scaled
/// mock noise) when rendered with `condition`.
inline SyntheticCorpus<ClusterRecord> blob_corpus(std::size_t labels, std::size_t per_label, std::size_t dim,
                                                  std::optional<std::string> condition = std::nullopt,
                                                  double separation = 3.0, double epsilon = 0.01) {
  if (labels == 0 || per_label == 0) fail(ErrorCode::InvalidArgument, "need at least one label and one text");
  if (dim < labels || dim < 2) fail(ErrorCode::InvalidArgument, "dim must be at least the label count");
  SyntheticCorpus<ClusterRecord> out;
  out.plan.epsilon = epsilon;
  for (std::size_t j = 0; j < per_label; ++j) {
    for (std::size_t c = 0; c < labels; ++c) {
      ClusterRecord r;
      r.text = "text " + std::to_string(j) + " of class " + std::to_string(c);
      r.label = "class-" + std::to_string(c);
      r.split = Split::Validation;
      std::vector<double> center(dim, 0.0);
      center[c] = separation;
      out.plan.rules.push_back({r.text, condition, std::nullopt, center});
      out.records.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace ponte
