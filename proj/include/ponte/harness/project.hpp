#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "ponte/backend/batch.hpp"
#include "ponte/harness/records.hpp"
#include "ponte/projection.hpp"

namespace ponte {

struct ProjectionRow {
  std::string text;
  std::string label;
  std::string condition;
  std::string word;
  double x = 0.0;
  double y = 0.0;
};

struct ProjectionResult {
  std::string template_id;
  std::string model_id;
  std::vector<ProjectionRow> rows;
  Projection2D projection;
};

/// Embeds every text under every condition and lays all embeddings out in
/// one 2-D t-SNE map.
inline ProjectionResult project_texts(const std::vector<ClusterRecord> &records, const PromptTemplate &tmpl,
                                      const std::vector<std::string> &conditions, EmbeddingBackend &backend,
                                      EmbeddingCache *cache, const TsneConfig &config) {
  if (records.empty()) fail(ErrorCode::EmptyInput, "nothing to project");
  const std::vector<std::string> effective = conditions.empty() ? std::vector<std::string>{""} : conditions;

  std::vector<ConditionalPrompt> prompts;
  std::vector<ProjectionRow> rows;
  for (const auto &condition : effective) {
    for (const auto &r : records) {
      prompts.push_back(render(tmpl, r.text, condition));
      rows.push_back({r.text, r.label, condition, "", 0.0, 0.0});
    }
  }
  const auto embedded = embed_batch(backend, prompts, cache);
  std::vector<EmbeddingVector> points;
  points.reserve(embedded.size());
  for (std::size_t i = 0; i < embedded.size(); ++i) {
    points.push_back(embedded[i].embedding);
    rows[i].word = embedded[i].generated_word.value_or("");
  }

  ProjectionResult result;
  result.template_id = tmpl.id;
  result.model_id = backend.model_id();
  result.projection = tsne(points, config);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].x = result.projection.coords[i][0];
    rows[i].y = result.projection.coords[i][1];
  }
  result.rows = std::move(rows);
  return result;
}

namespace detail {

inline std::string tsv_field(std::string s) {
  std::replace_if(s.begin(), s.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; }, ' ');
  return s;
}

inline std::string xml_escape(const std::string &s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string fixed(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

}  // namespace detail

/// Columns: x, y, label, generated_word, condition; header line first.
inline void write_projection_tsv(std::ostream &out, const std::vector<ProjectionRow> &rows) {
  out << "x\ty\tlabel\tgenerated_word\tcondition\n";
  for (const auto &r : rows) {
    out << detail::fixed(r.x) << '\t' << detail::fixed(r.y) << '\t' << detail::tsv_field(r.label) << '\t'
        << detail::tsv_field(r.word) << '\t' << detail::tsv_field(r.condition) << '\n';
  }
}

/// Static scatter: one color per condition, each point annotated with its
/// generated word (or its label when no word is available).
inline void write_projection_svg(std::ostream &out, const std::vector<ProjectionRow> &rows, int size = 800) {
  static const char *kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  const double margin = 60.0;
  double min_x = 0, max_x = 0, min_y = 0, max_y = 0;
  if (!rows.empty()) {
    min_x = max_x = rows[0].x;
    min_y = max_y = rows[0].y;
  }
  for (const auto &r : rows) {
    min_x = std::min(min_x, r.x);
    max_x = std::max(max_x, r.x);
    min_y = std::min(min_y, r.y);
    max_y = std::max(max_y, r.y);
  }
  const double span = std::max({max_x - min_x, max_y - min_y, 1e-12});
  const double scale = (size - 2 * margin) / span;

  std::map<std::string, std::size_t> colors;
  for (const auto &r : rows) colors.try_emplace(r.condition, colors.size());

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
      << "\" viewBox=\"0 0 " << size << ' ' << size << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto &r : rows) {
    const double px = margin + (r.x - min_x) * scale;
    const double py = size - margin - (r.y - min_y) * scale;
    const char *color = kPalette[colors[r.condition] % std::size(kPalette)];
    out << "<circle cx=\"" << detail::fixed(px, 2) << "\" cy=\"" << detail::fixed(py, 2) << "\" r=\"4\" fill=\""
        << color << "\"/>\n";
    out << "<text x=\"" << detail::fixed(px + 6, 2) << "\" y=\"" << detail::fixed(py - 6, 2)
        << "\" font-size=\"11\" font-family=\"sans-serif\" fill=\"" << color << "\">"
        << detail::xml_escape(r.word.empty() ? r.label : r.word) << "</text>\n";
  }
  double legend_y = 20.0;
  for (const auto &[condition, index] : colors) {
    out << "<text x=\"10\" y=\"" << detail::fixed(legend_y, 2)
        << "\" font-size=\"12\" font-family=\"sans-serif\" fill=\"" << kPalette[index % std::size(kPalette)] << "\">"
        << detail::xml_escape(condition.empty() ? "(no condition)" : condition) << "</text>\n";
    legend_y += 16.0;
  }
  out << "</svg>\n";
}

}  // namespace ponte
