#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ponte/harness/eval.hpp"
#include "ponte/harness/project.hpp"

namespace ponte {

using Json = nlohmann::ordered_json;

/// Fields that differ between otherwise identical runs.
inline const std::vector<std::string> kTimestampKeys{"started_at", "finished_at"};

inline std::string utc_timestamp(std::chrono::system_clock::time_point t = std::chrono::system_clock::now(),
                                 bool compact = false) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, compact ? "%Y%m%dT%H%M%SZ" : "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Run context recorded in every report.
struct ReportContext {
  std::string dataset;
  BackendConfig backend;
  std::string model_id;
  std::string started_at;
};

namespace detail {

inline Json optional_string(const std::optional<std::string> &s) { return s ? Json(*s) : Json(nullptr); }

inline Json envelope(const std::string &task, const ReportContext &ctx, Json config, Json summary, Json items) {
  config["dataset"] = ctx.dataset;
  config["model_id"] = ctx.model_id;
  config["endpoint"] = ctx.backend.endpoint;
  config["layer_index"] = ctx.backend.layer_index;
  config["generate_words"] = ctx.backend.generate_words;
  return Json{{"task", task},
              {"started_at", ctx.started_at},
              {"finished_at", utc_timestamp()},
              {"config", std::move(config)},
              {"summary", std::move(summary)},
              {"items", std::move(items)}};
}

inline Json csts_summary(const CorrelationReport &c) {
  return {{"spearman_rho", c.spearman_rho}, {"pearson_r", c.pearson_r}, {"n", c.n}};
}

inline Json csts_items(const CstsEvalResult &result) {
  Json items = Json::array();
  for (const auto &item : result.items) {
    items.push_back({{"text1", item.text1},
                     {"text2", item.text2},
                     {"condition", item.condition},
                     {"gold", item.gold},
                     {"prediction", item.prediction},
                     {"scaled_prediction", item.scaled},
                     {"word1", optional_string(item.word1)},
                     {"word2", optional_string(item.word2)}});
  }
  return items;
}

inline Json v_json(const VMeasureReport &v) {
  return {{"homogeneity", v.homogeneity}, {"completeness", v.completeness}, {"v_measure", v.v_measure}};
}

inline Json cluster_summary(const ClusterEvalResult &result) {
  Json per_seed = Json::array();
  for (const auto &run : result.clustering.runs) {
    Json entry = v_json(run.score);
    entry["seed"] = run.seed;
    entry["inertia"] = run.clustering.inertia;
    entry["iterations"] = run.clustering.iterations_run;
    per_seed.push_back(std::move(entry));
  }
  return {{"mean", v_json(result.clustering.mean)}, {"per_seed", std::move(per_seed)}};
}

inline Json cluster_items(const ClusterEvalResult &result) {
  Json items = Json::array();
  for (std::size_t i = 0; i < result.items.size(); ++i) {
    Json assignments = Json::array();
    for (const auto &run : result.clustering.runs) assignments.push_back(run.clustering.assignments[i]);
    items.push_back({{"text", result.items[i].text},
                     {"label", result.items[i].label},
                     {"word", optional_string(result.items[i].word)},
                     {"clusters", std::move(assignments)}});
  }
  return items;
}

inline Json seeds_json(const ClusterEvalResult &result) {
  Json seeds = Json::array();
  for (const auto &run : result.clustering.runs) seeds.push_back(run.seed);
  return seeds;
}

}  // namespace detail

inline Json csts_report(const CstsEvalResult &result, const ReportContext &ctx) {
  return detail::envelope("csts", ctx, Json{{"template", result.template_id}},
                          detail::csts_summary(result.correlation), detail::csts_items(result));
}

inline Json cluster_report(const ClusterEvalResult &result, const ReportContext &ctx) {
  Json config{{"template", result.template_id},
              {"condition_text", result.condition},
              {"k", result.k},
              {"seeds", detail::seeds_json(result)}};
  return detail::envelope("clustering", ctx, std::move(config), detail::cluster_summary(result),
                          detail::cluster_items(result));
}

/// Ranked table in `summary`; each template's per-pair payload in `items`.
inline Json template_search_report(const TemplateSearchResult &result, const ReportContext &ctx) {
  Json ranking = Json::array();
  for (const auto &row : result.ranking) {
    ranking.push_back({{"template", row.template_id},
                       {"spearman_rho", row.spearman_rho},
                       {"pearson_r", row.pearson_r},
                       {"selected", row.selected}});
  }
  Json templates = Json::array();
  Json items = Json::array();
  for (const auto &run : result.runs) {
    templates.push_back(run.template_id);
    items.push_back({{"template", run.template_id},
                     {"summary", detail::csts_summary(run.correlation)},
                     {"items", detail::csts_items(run)}});
  }
  return detail::envelope("template-search", ctx, Json{{"templates", templates}},
                          Json{{"selected", result.ranking.front().template_id}, {"ranking", ranking}}, items);
}

inline Json condition_search_report(const ConditionSearchResult &result, const ReportContext &ctx) {
  Json ranking = Json::array();
  for (const auto &row : result.ranking) {
    ranking.push_back({{"condition_text", row.condition}, {"v_measure", row.v_measure}, {"selected", row.selected}});
  }
  Json conditions = Json::array();
  Json items = Json::array();
  for (const auto &run : result.runs) {
    conditions.push_back(run.condition);
    items.push_back({{"condition_text", run.condition},
                     {"summary", detail::cluster_summary(run)},
                     {"items", detail::cluster_items(run)}});
  }
  const auto &first = result.runs.front();
  Json config{{"template", first.template_id},
              {"conditions", conditions},
              {"k", first.k},
              {"seeds", detail::seeds_json(first)}};
  return detail::envelope("condition-search", ctx, std::move(config),
                          Json{{"selected", result.ranking.front().condition}, {"ranking", ranking}}, items);
}

inline Json projection_report(const ProjectionResult &result, const TsneConfig &tsne_config, const ReportContext &ctx) {
  Json items = Json::array();
  for (const auto &r : result.rows) {
    items.push_back({{"text", r.text},
                     {"label", r.label},
                     {"condition", r.condition},
                     {"generated_word", r.word},
                     {"x", r.x},
                     {"y", r.y}});
  }
  Json config{{"template", result.template_id},
              {"perplexity", result.projection.perplexity},
              {"iters", tsne_config.iters},
              {"learning_rate", tsne_config.learning_rate},
              {"seed", tsne_config.seed}};
  return detail::envelope("projection", ctx, std::move(config),
                          Json{{"kl_initial", result.projection.kl_initial}, {"kl_final", result.projection.kl_final},
                               {"points", result.rows.size()}},
                          std::move(items));
}

/// Copy of `report` without run timestamps.
inline Json strip_timestamps(Json report) {
  for (const auto &key : kTimestampKeys) report.erase(key);
  return report;
}

namespace detail {

inline Json recompute_csts(const Json &items) {
  std::vector<double> predictions, gold;
  for (const auto &item : items) {
    predictions.push_back(item.at("prediction").get<double>());
    gold.push_back(item.at("gold").get<double>());
  }
  return csts_summary(correlate(predictions, gold));
}

inline Json recompute_cluster(const Json &items, const Json &stored_summary) {
  std::vector<std::string> gold;
  for (const auto &item : items) gold.push_back(item.at("label").get<std::string>());
  const auto &per_seed = stored_summary.at("per_seed");
  std::vector<SeedRun> runs(per_seed.size());
  for (std::size_t s = 0; s < runs.size(); ++s) {
    std::vector<std::size_t> assignments;
    for (const auto &item : items) assignments.push_back(item.at("clusters").at(s).get<std::size_t>());
    runs[s].seed = per_seed[s].at("seed").get<std::uint64_t>();
    runs[s].score = v_measure(gold, assignments);
  }
  Json out_seeds = Json::array();
  for (std::size_t s = 0; s < runs.size(); ++s) {
    Json entry = v_json(runs[s].score);
    entry["seed"] = runs[s].seed;
    entry["inertia"] = per_seed[s].at("inertia");  // not derivable from labels
    entry["iterations"] = per_seed[s].at("iterations");
    out_seeds.push_back(std::move(entry));
  }
  return {{"mean", v_json(mean_report(runs))}, {"per_seed", std::move(out_seeds)}};
}

}  // namespace detail

/// Recomputes `summary` from the per-item payload of a csts, clustering or
/// search report. Equality with the stored summary certifies the report.
inline Json recompute_summary(const Json &report) {
  const auto task = report.at("task").get<std::string>();
  const auto &items = report.at("items");
  if (task == "csts") return detail::recompute_csts(items);
  if (task == "clustering") return detail::recompute_cluster(items, report.at("summary"));
  if (task == "template-search" || task == "condition-search") {
    const bool csts = task == "template-search";
    const char *key = csts ? "template" : "condition_text";
    const char *score = csts ? "spearman_rho" : "v_measure";
    struct Entry {
      Json row;
      double score;
    };
    std::vector<Entry> rows;
    for (const auto &run : items) {
      const Json summary =
          csts ? detail::recompute_csts(run.at("items")) : detail::recompute_cluster(run.at("items"), run.at("summary"));
      Json row{{key, run.at(key)}};
      if (csts) {
        row["spearman_rho"] = summary.at("spearman_rho");
        row["pearson_r"] = summary.at("pearson_r");
      } else {
        row["v_measure"] = summary.at("mean").at("v_measure");
      }
      const double value = csts ? summary.at(score).get<double>() : summary.at("mean").at(score).get<double>();
      rows.push_back({std::move(row), value});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const auto &a, const auto &b) { return a.score > b.score; });
    Json ranking = Json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      rows[i].row["selected"] = i == 0;
      ranking.push_back(rows[i].row);
    }
    return Json{{"selected", rows.front().row.at(key)}, {"ranking", std::move(ranking)}};
  }
  fail(ErrorCode::InvalidArgument, "no recomputation for task '" + task + "'");
}

/// `{task}-{dataset}-{template}-{timestamp}.json`
inline std::string report_file_name(const std::string &task, const std::string &dataset, const std::string &template_id,
                                    const std::string &compact_timestamp, const std::string &extension = ".json") {
  auto sanitize = [](std::string s) {
    for (char &c : s) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
    }
    return s;
  };
  return sanitize(task) + "-" + sanitize(dataset) + "-" + sanitize(template_id) + "-" + compact_timestamp + extension;
}

inline void write_text_file(const std::filesystem::path &path, const std::string &content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
}

/// Flattens a csts or clustering report to TSV (one row per item).
inline std::string flatten_tsv(const Json &report) {
  const auto task = report.at("task").get<std::string>();
  std::string out;
  auto field = [](const Json &v) {
    std::string s = v.is_string() ? v.get<std::string>() : v.is_null() ? std::string() : v.dump();
    std::replace_if(s.begin(), s.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; }, ' ');
    return s;
  };
  if (task == "csts") {
    out += "text1\ttext2\tcondition\tgold\tprediction\tscaled_prediction\tword1\tword2\n";
    for (const auto &item : report.at("items")) {
      for (const char *key : {"text1", "text2", "condition", "gold", "prediction", "scaled_prediction", "word1"}) {
        out += field(item.at(key)) + "\t";
      }
      out += field(item.at("word2")) + "\n";
    }
    return out;
  }
  if (task == "clustering") {
    out += "text\tlabel\tword\tclusters\n";
    for (const auto &item : report.at("items")) {
      out += field(item.at("text")) + "\t" + field(item.at("label")) + "\t" + field(item.at("word")) + "\t" +
             field(item.at("clusters")) + "\n";
    }
    return out;
  }
  fail(ErrorCode::InvalidArgument, "TSV flattening supports csts and clustering reports");
}

}  // namespace ponte
