#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ponte/ponte.hpp"

namespace fs = std::filesystem;
using namespace ponte;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitBackend = 3;

struct BackendOptions {
  std::string url = "mock";
  std::string model_id;
  int layer = -1;
  std::size_t mock_dim = 64;
  std::uint64_t mock_seed = 0;
  std::string mock_mix;
  bool generate_words = false;
  std::size_t max_word_tokens = 16;
  std::size_t parallel = 4;
  long timeout_ms = 60000;
  std::string cache_dir;

  BackendConfig config() const {
    BackendConfig c;
    c.endpoint = url;
    c.model_id = model_id;
    c.layer_index = layer;
    c.mock_dim = mock_dim;
    c.mock_seed = mock_seed;
    c.generate_words = generate_words;
    c.max_word_tokens = max_word_tokens;
    c.max_parallel_requests = parallel;
    c.request_timeout = std::chrono::milliseconds(timeout_ms);
    return c;
  }

  std::unique_ptr<EmbeddingBackend> backend() const {
    std::optional<MixPlan> plan;
    if (!mock_mix.empty()) plan = load_mix_plan(mock_mix);
    return make_backend(config(), std::move(plan));
  }

  std::unique_ptr<EmbeddingCache> cache() const {
    std::string dir = cache_dir;
    if (dir.empty()) {
      if (const char *env = std::getenv("PONTE_CACHE_DIR")) dir = env;
    }
    if (dir.empty()) return nullptr;
    return std::make_unique<EmbeddingCache>(dir);
  }
};

void add_backend_options(CLI::App *cmd, BackendOptions &o) {
  cmd->add_option("--backend-url", o.url, "Inference service base URL, or 'mock'")->capture_default_str();
  cmd->add_option("--model-id", o.model_id, "Model identifier (required for remote backends)");
  cmd->add_option("--layer", o.layer, "Hidden layer index; negative counts from the last")->capture_default_str();
  cmd->add_option("--mock-dim", o.mock_dim, "Mock embedding dimension")->capture_default_str();
  cmd->add_option("--mock-seed", o.mock_seed, "Mock embedding seed")->capture_default_str();
  cmd->add_option("--mock-mix", o.mock_mix, "JSON mix plan placing mock embeddings at chosen centers")
      ->check(CLI::ExistingFile);
  cmd->add_flag("--generate-words", o.generate_words, "Request the one-word output for each prompt");
  cmd->add_option("--max-word-tokens", o.max_word_tokens, "Token cap for generated words")->capture_default_str();
  cmd->add_option("--parallel", o.parallel, "Concurrent backend requests")->capture_default_str();
  cmd->add_option("--timeout", o.timeout_ms, "Per-request timeout in milliseconds")->capture_default_str();
  cmd->add_option("--cache-dir", o.cache_dir, "Embedding cache directory (default: $PONTE_CACHE_DIR, else none)");
}

struct DataOptions {
  std::string dataset;
  std::string format;
  std::string split;
  std::string templates_file;
  std::string out = ".";
  bool tsv = false;

  DataFormat data_format() const { return format.empty() ? format_for_path(dataset) : parse_format(format); }

  Split data_split() const {
    const auto s = parse_split(split);
    if (!s) fail(ErrorCode::InvalidArgument, "unknown split '" + split + "' (expected validation or test)");
    return *s;
  }

  std::string dataset_name() const { return fs::path(dataset).stem().string(); }

  std::vector<PromptTemplate> templates() const {
    return templates_file.empty() ? registry() : load_templates(templates_file);
  }
};

void add_data_options(CLI::App *cmd, DataOptions &o, bool with_out = true) {
  cmd->add_option("--dataset", o.dataset, "CSV or JSONL dataset")->required()->check(CLI::ExistingFile);
  cmd->add_option("--format", o.format, "csv or jsonl (default: from the file extension)");
  cmd->add_option("--split", o.split, "Keep only rows of this split (validation or test)");
  cmd->add_option("--templates-file", o.templates_file, "Tab-separated 'id<TAB>pattern' templates replacing the built-ins")
      ->check(CLI::ExistingFile);
  if (with_out) {
    cmd->add_option("--out", o.out, "Report directory")->capture_default_str();
    cmd->add_flag("--tsv", o.tsv, "Also write a tab-separated flattening of the report");
  }
}

fs::path unique_path(const fs::path &dir, const std::string &name) {
  fs::path path = dir / name;
  const auto stem = path.stem().string();
  const auto ext = path.extension().string();
  for (int i = 2; fs::exists(path); ++i) path = dir / (stem + "-" + std::to_string(i) + ext);
  return path;
}

fs::path write_report(const DataOptions &data, const Json &report, const std::string &task,
                      const std::string &template_label, const std::string &compact_ts) {
  fs::create_directories(data.out);
  const auto path = unique_path(data.out, report_file_name(task, data.dataset_name(), template_label, compact_ts));
  write_text_file(path, report.dump(2) + "\n");
  std::cout << "report: " << path.string() << "\n";
  if (data.tsv) {
    auto tsv_path = path;
    tsv_path.replace_extension(".tsv");
    write_text_file(tsv_path, flatten_tsv(report));
    std::cout << "tsv: " << tsv_path.string() << "\n";
  }
  return path;
}

struct Run {
  std::chrono::system_clock::time_point started = std::chrono::system_clock::now();
  std::string iso() const { return utc_timestamp(started); }
  std::string compact() const { return utc_timestamp(started, true); }
};

ReportContext context(const DataOptions &data, const BackendOptions &b, const EmbeddingBackend &backend, const Run &run) {
  return {data.dataset_name(), b.config(), backend.model_id(), run.iso()};
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << std::fixed << v;
  return s.str();
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Conditional text embeddings from prompted language models: evaluation harness"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("ponte 1.0.0"));

  BackendOptions b;
  DataOptions data;
  std::string template_id = "T9";
  std::string condition;
  std::vector<std::string> conditions;
  std::vector<std::string> template_ids;
  std::string text;
  std::optional<std::size_t> k;
  std::vector<std::uint64_t> seeds = kDefaultSeeds;
  std::optional<double> perplexity;
  std::size_t iters = 1000;
  std::uint64_t tsne_seed = 0;
  bool svg = false;

  auto seeds_option = [&](CLI::App *cmd) {
    cmd->add_option("--seeds", seeds, "Comma-separated k-means seeds")->delimiter(',')->capture_default_str();
    cmd->add_option("--k", k, "Cluster count (default: number of gold labels)");
  };

  // embed
  auto *embed_cmd = app.add_subcommand("embed", "Embed one text under a template and condition");
  add_backend_options(embed_cmd, b);
  embed_cmd->add_option("--text", text, "Input text")->required();
  embed_cmd->add_option("--template", template_id, "Template id")->capture_default_str();
  embed_cmd->add_option("--condition", condition, "Condition text");
  embed_cmd->add_option("--templates-file", data.templates_file, "Custom templates file")->check(CLI::ExistingFile);

  // csts-eval
  auto *csts_cmd = app.add_subcommand("csts-eval", "Conditional similarity: Spearman/Pearson against gold scores");
  add_backend_options(csts_cmd, b);
  add_data_options(csts_cmd, data);
  csts_cmd->add_option("--template", template_id, "Conditional template id")->capture_default_str();

  // cluster-eval
  auto *cluster_cmd = app.add_subcommand("cluster-eval", "K-means clustering under one condition, V-measure over seeds");
  add_backend_options(cluster_cmd, b);
  add_data_options(cluster_cmd, data);
  cluster_cmd->add_option("--template", template_id, "Template id")->capture_default_str();
  cluster_cmd->add_option("--condition", condition, "Condition text shared by every prompt")->required();
  seeds_option(cluster_cmd);

  // template-search
  auto *tsearch_cmd = app.add_subcommand("template-search", "Rank templates by validation Spearman correlation");
  add_backend_options(tsearch_cmd, b);
  add_data_options(tsearch_cmd, data);
  tsearch_cmd->add_option("--template", template_ids, "Restrict to these template ids (repeatable)");

  // condition-search
  auto *csearch_cmd = app.add_subcommand("condition-search", "Rank condition texts by mean V-measure");
  add_backend_options(csearch_cmd, b);
  add_data_options(csearch_cmd, data);
  csearch_cmd->add_option("--template", template_id, "Template id")->capture_default_str();
  csearch_cmd->add_option("--condition", conditions, "Candidate condition text (repeatable)")->required();
  seeds_option(csearch_cmd);

  // project
  auto *project_cmd = app.add_subcommand("project", "2-D t-SNE map of texts under one or more conditions");
  add_backend_options(project_cmd, b);
  add_data_options(project_cmd, data, false);
  project_cmd->add_option("--out", data.out, "Output directory")->capture_default_str();
  project_cmd->add_option("--template", template_id, "Template id")->capture_default_str();
  project_cmd->add_option("--condition", conditions, "Condition text (repeatable)");
  project_cmd->add_option("--perplexity", perplexity, "t-SNE perplexity (default: 30, capped by point count)");
  project_cmd->add_option("--iters", iters, "t-SNE iterations")->capture_default_str();
  project_cmd->add_option("--seed", tsne_seed, "t-SNE initial layout seed")->capture_default_str();
  project_cmd->add_flag("--svg", svg, "Also write an SVG scatter plot");

  // cache
  auto *cache_cmd = app.add_subcommand("cache", "Inspect or clear the embedding cache");
  cache_cmd->require_subcommand(1);
  std::string cache_dir;
  auto *stats_cmd = cache_cmd->add_subcommand("stats", "Entry counts per model and bytes on disk");
  auto *clear_cmd = cache_cmd->add_subcommand("clear", "Remove every cached embedding");
  for (auto *cmd : {stats_cmd, clear_cmd}) {
    cmd->add_option("--cache-dir", cache_dir, "Cache directory (default: $PONTE_CACHE_DIR)");
  }

  // synth
  auto *synth_cmd = app.add_subcommand("synth", "Write a synthetic dataset and matching mock mix plan");
  synth_cmd->require_subcommand(1);
  std::size_t pairs = 20, labels = 3, per_label = 10, synth_dim = 64;
  std::string synth_out = ".";
  std::optional<std::string> synth_template, synth_condition;
  auto *synth_csts = synth_cmd->add_subcommand("csts", "Pairs whose similarity ranks follow gold exactly");
  synth_csts->add_option("--pairs", pairs, "Number of pairs")->capture_default_str();
  synth_csts->add_option("--template", synth_template, "Only this template sees the construction");
  auto *synth_blobs = synth_cmd->add_subcommand("blobs", "Texts that embed into one blob per label");
  synth_blobs->add_option("--labels", labels, "Number of labels")->capture_default_str();
  synth_blobs->add_option("--per-label", per_label, "Texts per label")->capture_default_str();
  synth_blobs->add_option("--condition", synth_condition, "Only this condition sees the blobs");
  for (auto *cmd : {synth_csts, synth_blobs}) {
    cmd->add_option("--dim", synth_dim, "Embedding dimension (pass the same --mock-dim later)")->capture_default_str();
    cmd->add_option("--out", synth_out, "Output directory")->capture_default_str();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    const Run run;
    if (*embed_cmd) {
      const auto templates = data.templates();
      const auto prompt = render(find_template(templates, template_id), text, condition);
      auto backend = b.backend();
      auto cache = b.cache();
      const auto result = embed_batch(*backend, {prompt}, cache.get()).front();
      Json out{{"prompt", prompt.rendered},
               {"model_id", result.model_id},
               {"layer_index", result.layer_index},
               {"dim", result.embedding.dim()},
               {"generated_word", result.generated_word ? Json(*result.generated_word) : Json(nullptr)},
               {"embedding", result.embedding.values}};
      std::cout << out.dump() << "\n";
    } else if (*csts_cmd) {
      const auto records = filter_split(load_csts(data.dataset, data.data_format()), data.data_split());
      const auto templates = data.templates();
      auto backend = b.backend();
      auto cache = b.cache();
      const auto result = csts_eval(records, find_template(templates, template_id), *backend, cache.get());
      std::cout << "template " << result.template_id << ": spearman_rho=" << fmt(result.correlation.spearman_rho)
                << " pearson_r=" << fmt(result.correlation.pearson_r) << " n=" << result.correlation.n << "\n";
      write_report(data, csts_report(result, context(data, b, *backend, run)), "csts", template_id, run.compact());
    } else if (*cluster_cmd) {
      const auto records = filter_split(load_cluster_corpus(data.dataset, data.data_format()), data.data_split());
      const auto templates = data.templates();
      auto backend = b.backend();
      auto cache = b.cache();
      const auto result =
          cluster_eval(records, find_template(templates, template_id), condition, *backend, cache.get(), k, seeds);
      const auto &mean = result.clustering.mean;
      std::cout << "condition \"" << condition << "\" k=" << result.k << ": v_measure=" << fmt(mean.v_measure)
                << " homogeneity=" << fmt(mean.homogeneity) << " completeness=" << fmt(mean.completeness) << "\n";
      write_report(data, cluster_report(result, context(data, b, *backend, run)), "clustering", template_id,
                   run.compact());
    } else if (*tsearch_cmd) {
      const auto records = filter_split(load_csts(data.dataset, data.data_format()), data.data_split());
      const auto all = data.templates();
      std::vector<PromptTemplate> chosen;
      for (const auto &id : template_ids) chosen.push_back(find_template(all, id));
      if (chosen.empty()) chosen = all;
      auto backend = b.backend();
      auto cache = b.cache();
      const auto result = template_search(records, chosen, *backend, cache.get());
      for (const auto &row : result.ranking) {
        std::cout << (row.selected ? "* " : "  ") << row.template_id << "\tspearman_rho=" << fmt(row.spearman_rho)
                  << "\tpearson_r=" << fmt(row.pearson_r) << "\n";
      }
      write_report(data, template_search_report(result, context(data, b, *backend, run)), "template-search",
                   template_ids.empty() ? "all" : "selection", run.compact());
    } else if (*csearch_cmd) {
      const auto records = filter_split(load_cluster_corpus(data.dataset, data.data_format()), data.data_split());
      const auto templates = data.templates();
      auto backend = b.backend();
      auto cache = b.cache();
      const auto result =
          condition_search(records, find_template(templates, template_id), conditions, *backend, cache.get(), k, seeds);
      for (const auto &row : result.ranking) {
        std::cout << (row.selected ? "* " : "  ") << row.condition << "\tv_measure=" << fmt(row.v_measure) << "\n";
      }
      write_report(data, condition_search_report(result, context(data, b, *backend, run)), "condition-search",
                   template_id, run.compact());
    } else if (*project_cmd) {
      const auto records = filter_split(load_cluster_corpus(data.dataset, data.data_format()), data.data_split());
      const auto templates = data.templates();
      auto backend = b.backend();
      auto cache = b.cache();
      TsneConfig tsne_config;
      tsne_config.perplexity = perplexity;
      tsne_config.iters = iters;
      tsne_config.seed = tsne_seed;
      const auto result =
          project_texts(records, find_template(templates, template_id), conditions, *backend, cache.get(), tsne_config);
      std::cout << "points=" << result.rows.size() << " perplexity=" << fmt(result.projection.perplexity)
                << " kl_initial=" << fmt(result.projection.kl_initial)
                << " kl_final=" << fmt(result.projection.kl_final) << "\n";
      const auto json_path = write_report(data, projection_report(result, tsne_config, context(data, b, *backend, run)),
                                          "projection", template_id, run.compact());
      auto tsv_path = json_path;
      tsv_path.replace_extension(".tsv");
      {
        std::ofstream out(tsv_path);
        write_projection_tsv(out, result.rows);
        if (!out) fail(ErrorCode::Io, "cannot write " + tsv_path.string());
      }
      std::cout << "tsv: " << tsv_path.string() << "\n";
      if (svg) {
        auto svg_path = json_path;
        svg_path.replace_extension(".svg");
        std::ofstream out(svg_path);
        write_projection_svg(out, result.rows);
        if (!out) fail(ErrorCode::Io, "cannot write " + svg_path.string());
        std::cout << "svg: " << svg_path.string() << "\n";
      }
    } else if (*cache_cmd) {
      if (cache_dir.empty()) {
        if (const char *env = std::getenv("PONTE_CACHE_DIR")) cache_dir = env;
      }
      if (cache_dir.empty()) fail(ErrorCode::InvalidArgument, "no cache directory: pass --cache-dir or set PONTE_CACHE_DIR");
      EmbeddingCache cache(cache_dir);
      if (*stats_cmd) {
        const auto stats = cache.stats();
        std::cout << "entries\t" << stats.entries << "\nbytes\t" << stats.bytes << "\n";
        for (const auto &[model, count] : stats.entries_per_model) std::cout << "model\t" << model << "\t" << count << "\n";
      } else {
        std::cout << "removed\t" << cache.clear() << "\n";
      }
    } else if (*synth_cmd) {
      fs::create_directories(synth_out);
      if (*synth_csts) {
        const auto corpus = rank_aligned_csts(pairs, synth_dim, synth_template);
        std::ostringstream csv;
        csv << "text1,text2,condition,score,split\n";
        for (const auto &r : corpus.records) {
          csv << r.text1 << "," << r.text2 << "," << r.condition << "," << r.gold << ",validation\n";
        }
        write_text_file(fs::path(synth_out) / "csts.csv", csv.str());
        write_text_file(fs::path(synth_out) / "csts_mix.json", mix_plan_to_json(corpus.plan).dump(2) + "\n");
        std::cout << "wrote " << (fs::path(synth_out) / "csts.csv").string() << " and csts_mix.json\n";
      } else {
        const auto corpus = blob_corpus(labels, per_label, synth_dim, synth_condition);
        std::ostringstream csv;
        csv << "text,label,split\n";
        for (const auto &r : corpus.records) csv << r.text << "," << r.label << ",validation\n";
        write_text_file(fs::path(synth_out) / "blobs.csv", csv.str());
        write_text_file(fs::path(synth_out) / "blobs_mix.json", mix_plan_to_json(corpus.plan).dump(2) + "\n");
        std::cout << "wrote " << (fs::path(synth_out) / "blobs.csv").string() << " and blobs_mix.json\n";
      }
    }
  } catch (const Error &e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.message() << "\n";
    return is_backend_error(e.code()) ? kExitBackend : kExitInput;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return 0;
}
