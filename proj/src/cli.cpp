#include "taxonav/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "taxonav/batch.hpp"
#include "taxonav/diagnostics.hpp"
#include "taxonav/errors.hpp"
#include "taxonav/eval.hpp"
#include "taxonav/jsonl.hpp"
#include "taxonav/knn.hpp"
#include "taxonav/remote_scorer.hpp"
#include "taxonav/sha256.hpp"

namespace taxonav {

namespace {

// JSON config files: top-level keys set main options, nested objects scope
// their keys to the subcommand of that name. Flags given on the command line
// always win over config values.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      input >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConfigError(std::string("config file is not valid JSON: ") + e.what());
    }
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void collect(const nlohmann::json& j, std::vector<std::string> parents,
                      std::vector<CLI::ConfigItem>& items) {
    if (!j.is_object()) {
      throw CLI::ConfigError("config file must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto nested = parents;
        nested.push_back(key);
        collect(value, std::move(nested), items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& elem : value) item.inputs.push_back(scalar(elem));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

nlohmann::json file_stamp(const std::string& path) {
  return {{"path", path}, {"sha256", sha256_file_hex(path)}};
}

// Output provenance. Worker counts and output destinations are deliberately
// not part of it: results must not depend on either.
nlohmann::json make_meta(const std::string& command, nlohmann::json config,
                         const std::vector<std::pair<std::string, std::string>>& inputs) {
  nlohmann::json in = nlohmann::json::object();
  for (const auto& [role, path] : inputs) in[role] = file_stamp(path);
  return nlohmann::json{{"command", command}, {"config", std::move(config)}, {"inputs", in}};
}

void write_jsonl_with_meta(const std::string& path, const nlohmann::json& meta,
                           const std::vector<nlohmann::json>& records) {
  std::ostringstream out;
  out << nlohmann::json{{"meta", meta}}.dump() << "\n";
  for (const auto& r : records) out << r.dump() << "\n";
  atomic_write(path, out.str());
}

void emit_report(const nlohmann::json& report, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    atomic_write(out_path, report.dump(2) + "\n");
  }
}

// Everything the engine-driving subcommands share.
struct EngineOptions {
  std::string taxonomy_path;
  std::string scorer_kind;
  std::string mock_table;
  std::string query_embeddings;
  std::string node_embeddings;
  std::string remote_config;
  std::string cache_path;
  int select = 9;
  int min = 8;
  int max_score = 10;
  size_t node_k = 0;  // 0 = plain tree search
  unsigned workers = 0;

  void add_scorer_flags(CLI::App* cmd) {
    cmd->add_option("--taxonomy", taxonomy_path, "taxonomy JSONL file")->required();
    cmd->add_option("--scorer", scorer_kind, "mock | embedding | remote")->required();
    cmd->add_option("--mock-table", mock_table, "mock scorer table (JSON)");
    cmd->add_option("--query-embeddings", query_embeddings, "query embedding JSONL");
    cmd->add_option("--node-embeddings", node_embeddings, "node embedding JSONL");
    cmd->add_option("--remote-config", remote_config, "remote scorer config (JSON)");
    cmd->add_option("--cache", cache_path, "score cache file (remote scorer)");
  }
  void add_threshold_flags(CLI::App* cmd) {
    cmd->add_option("--select", select, "selection threshold s");
    cmd->add_option("--min", min, "minimum threshold m");
    cmd->add_option("--max-score", max_score, "scoring scale ceiling R");
    cmd->add_option("--node-k", node_k, "score only the node-k nearest children per expansion");
  }
};

struct ScorerBundle {
  std::unique_ptr<MockScorer> mock;
  std::unique_ptr<EmbeddingStore> query_store;
  std::unique_ptr<EmbeddingStore> node_store;
  std::unique_ptr<EmbeddingScorer> embedding;
  std::unique_ptr<RemoteScorer> remote;
  SemanticScorer* scorer = nullptr;
  nlohmann::json echo;
  std::vector<std::pair<std::string, std::string>> inputs;
};

ScorerBundle make_scorer(const EngineOptions& opt) {
  ScorerBundle b;

  // embedding stores serve double duty: the embedding scorer reads both, and
  // the k-NN prefilter needs them regardless of scorer choice
  bool want_stores = opt.scorer_kind == "embedding" || opt.node_k > 0;
  if (want_stores) {
    if (opt.query_embeddings.empty() || opt.node_embeddings.empty()) {
      throw ValidationError(ErrorCode::InvalidConfig,
                            "this configuration needs --query-embeddings and --node-embeddings");
    }
  }
  if (!opt.query_embeddings.empty()) {
    b.query_store = std::make_unique<EmbeddingStore>(
        EmbeddingStore::from_file(opt.query_embeddings));
    b.inputs.emplace_back("query_embeddings", opt.query_embeddings);
  }
  if (!opt.node_embeddings.empty()) {
    b.node_store = std::make_unique<EmbeddingStore>(
        EmbeddingStore::from_file(opt.node_embeddings));
    b.inputs.emplace_back("node_embeddings", opt.node_embeddings);
  }

  if (opt.scorer_kind == "mock") {
    if (opt.mock_table.empty()) {
      throw ValidationError(ErrorCode::InvalidConfig, "--scorer mock needs --mock-table");
    }
    b.mock = std::make_unique<MockScorer>(MockScorer::from_file(opt.mock_table));
    b.scorer = b.mock.get();
    b.echo = {{"kind", "mock"}};
    b.inputs.emplace_back("mock_table", opt.mock_table);
  } else if (opt.scorer_kind == "embedding") {
    b.embedding = std::make_unique<EmbeddingScorer>(*b.query_store, *b.node_store);
    b.scorer = b.embedding.get();
    b.echo = {{"kind", "embedding"}};
  } else if (opt.scorer_kind == "remote") {
    if (opt.remote_config.empty()) {
      throw ValidationError(ErrorCode::InvalidConfig, "--scorer remote needs --remote-config");
    }
    RemoteScorerConfig cfg = remote_config_from_file(opt.remote_config);
    if (!opt.cache_path.empty()) cfg.cache_path = opt.cache_path;
    b.echo = {{"kind", "remote"},
              {"model", cfg.model},
              {"url", cfg.url},
              {"completion_path", cfg.completion_path}};
    b.remote = std::make_unique<RemoteScorer>(std::move(cfg));
    b.scorer = b.remote.get();
    b.inputs.emplace_back("remote_config", opt.remote_config);
  } else {
    throw ValidationError(ErrorCode::InvalidConfig, "unknown scorer: " + opt.scorer_kind);
  }
  return b;
}

QueryRunner make_runner(const Taxonomy& t, const ScorerBundle& b, const ThresholdConfig& cfg,
                        size_t node_k) {
  SemanticScorer& scorer = *b.scorer;
  if (node_k == 0) {
    return [&t, &scorer, cfg](const Query& q) { return cot_bfs(q, t, scorer, cfg); };
  }
  const EmbeddingStore& qstore = *b.query_store;
  const EmbeddingStore& nstore = *b.node_store;
  return [&t, &scorer, cfg, &qstore, &nstore, node_k](const Query& q) {
    return cot_knn_hybrid_bfs(q, t, scorer, cfg, nstore, qstore.vector(q.id), node_k);
  };
}

nlohmann::json engine_config_echo(const EngineOptions& opt, const ScorerBundle& b) {
  nlohmann::json cfg{{"select", opt.select},
                     {"min", opt.min},
                     {"max_score", opt.max_score},
                     {"scorer", b.echo}};
  if (opt.node_k > 0) cfg["node_k"] = opt.node_k;
  return cfg;
}

int do_validate(const std::string& taxonomy_path) {
  Taxonomy t = load_taxonomy_file(taxonomy_path);
  size_t leaves = t.leaves().size();
  size_t max_depth = 0;
  for (const auto& id : t.ids()) {
    max_depth = std::max(max_depth, path_to_root(t, id).size() - 1);
  }
  std::cout << "taxonomy ok: " << t.size() << " nodes, " << leaves << " leaves, max depth "
            << max_depth << ", root \"" << t.root_id() << "\"\n";
  return 0;
}

int do_categorize(const EngineOptions& opt, const std::string& query_text,
                  const std::string& query_id, const std::string& intent,
                  const std::string& free_context, bool render_tree, const std::string& out_path,
                  const std::string& trace_out) {
  if (!intent.empty() && !free_context.empty()) {
    throw ValidationError(ErrorCode::InvalidConfig, "--intent and --context are exclusive");
  }
  Taxonomy t = load_taxonomy_file(opt.taxonomy_path);
  ScorerBundle bundle = make_scorer(opt);
  ThresholdConfig cfg{opt.select, opt.min, opt.max_score};
  validate_config(cfg);

  Query q;
  q.id = query_id.empty() ? query_text : query_id;
  q.text = query_text;
  if (!intent.empty()) q.context = QueryContext{ContextKind::intent, intent};
  if (!free_context.empty()) q.context = QueryContext{ContextKind::free_text, free_context};

  SearchResult r = make_runner(t, bundle, cfg, opt.node_k)(q);

  if (render_tree) std::cout << render_trace_tree(r.trace, t);
  std::cout << prediction_set_to_json(r.predictions).dump() << "\n";

  nlohmann::json cfg_echo = engine_config_echo(opt, bundle);
  if (q.context.kind != ContextKind::none) {
    cfg_echo["context"] = {{"kind", context_kind_name(q.context.kind)}, {"text", q.context.text}};
  }
  auto inputs = bundle.inputs;
  inputs.emplace_back("taxonomy", opt.taxonomy_path);
  nlohmann::json meta = make_meta("categorize", cfg_echo, inputs);
  if (!out_path.empty()) {
    write_jsonl_with_meta(out_path, meta, {prediction_set_to_json(r.predictions)});
  }
  if (!trace_out.empty()) {
    write_jsonl_with_meta(trace_out, meta, {trace_to_json(r.trace)});
  }
  return 0;
}

int do_batch(const EngineOptions& opt, const std::string& queries_path,
             const std::string& out_path, const std::string& trace_out) {
  Taxonomy t = load_taxonomy_file(opt.taxonomy_path);
  ScorerBundle bundle = make_scorer(opt);
  ThresholdConfig cfg{opt.select, opt.min, opt.max_score};
  validate_config(cfg);
  std::vector<Query> queries = queries_from_file(queries_path);

  std::vector<SearchResult> results =
      run_batch(queries, make_runner(t, bundle, cfg, opt.node_k), opt.workers);

  auto inputs = bundle.inputs;
  inputs.emplace_back("taxonomy", opt.taxonomy_path);
  inputs.emplace_back("queries", queries_path);
  nlohmann::json meta = make_meta("batch", engine_config_echo(opt, bundle), inputs);

  std::vector<nlohmann::json> prediction_records;
  prediction_records.reserve(results.size());
  for (const auto& r : results) {
    prediction_records.push_back(prediction_set_to_json(r.predictions));
  }
  write_jsonl_with_meta(out_path, meta, prediction_records);

  if (!trace_out.empty()) {
    std::vector<nlohmann::json> trace_records;
    trace_records.reserve(results.size());
    for (const auto& r : results) trace_records.push_back(trace_to_json(r.trace));
    write_jsonl_with_meta(trace_out, meta, trace_records);
  }
  std::cerr << "categorized " << results.size() << " queries\n";
  return 0;
}

int do_baseline(const std::string& queries_path, const std::string& query_embeddings,
                const std::string& leaf_embeddings, size_t k, int max_score,
                int rescore_cutoff, const EngineOptions& scorer_opt,
                const std::string& out_path, unsigned workers) {
  std::vector<Query> queries = queries_from_file(queries_path);
  EmbeddingStore qstore = EmbeddingStore::from_file(query_embeddings);
  EmbeddingStore leaf_store = EmbeddingStore::from_file(leaf_embeddings);

  std::vector<std::pair<std::string, std::string>> inputs{
      {"queries", queries_path},
      {"query_embeddings", query_embeddings},
      {"leaf_embeddings", leaf_embeddings}};
  nlohmann::json cfg_echo{{"k", k}, {"max_score", max_score}};

  std::function<PredictionSet(const Query&)> run;
  std::unique_ptr<Taxonomy> taxonomy;
  ScorerBundle bundle;
  if (rescore_cutoff > 0) {
    if (scorer_opt.taxonomy_path.empty() || scorer_opt.scorer_kind.empty()) {
      throw ValidationError(ErrorCode::InvalidConfig,
                            "--rescore-cutoff needs --taxonomy and --scorer");
    }
    taxonomy = std::make_unique<Taxonomy>(load_taxonomy_file(scorer_opt.taxonomy_path));
    bundle = make_scorer(scorer_opt);
    inputs.insert(inputs.end(), bundle.inputs.begin(), bundle.inputs.end());
    inputs.emplace_back("taxonomy", scorer_opt.taxonomy_path);
    cfg_echo["rescore_cutoff"] = rescore_cutoff;
    cfg_echo["scorer"] = bundle.echo;
    const Taxonomy& t = *taxonomy;
    SemanticScorer& scorer = *bundle.scorer;
    run = [&qstore, &leaf_store, &t, &scorer, k, rescore_cutoff, max_score](const Query& q) {
      return knn_then_score(q, qstore.vector(q.id), t, leaf_store, k, scorer, rescore_cutoff,
                            max_score);
    };
  } else {
    run = [&qstore, &leaf_store, k, max_score](const Query& q) {
      PredictionSet ps = baseline_categorize(qstore.vector(q.id), leaf_store, k, max_score);
      ps.query_id = q.id;
      return ps;
    };
  }

  std::vector<PredictionSet> results = parallel_map<PredictionSet>(queries, run, workers);
  std::vector<nlohmann::json> records;
  records.reserve(results.size());
  for (const auto& ps : results) records.push_back(prediction_set_to_json(ps));
  nlohmann::json meta = make_meta("baseline", cfg_echo, inputs);
  if (out_path.empty()) {
    std::cout << nlohmann::json{{"meta", meta}}.dump() << "\n";
    for (const auto& r : records) std::cout << r.dump() << "\n";
  } else {
    write_jsonl_with_meta(out_path, meta, records);
  }
  return 0;
}

int do_evaluate(const std::string& predictions_path, const std::string& judgments_path,
                const std::string& policy_name, const std::string& out_path) {
  EvalPolicy policy = eval_policy_from_name(policy_name);
  PredictionSets predictions = prediction_sets_from_file(predictions_path);
  GroundTruth truth = ground_truth_from_file(judgments_path);
  MetricsReport report = compute_metrics(predictions, truth, policy);

  nlohmann::json out = metrics_to_json(report);
  out["meta"] = make_meta("evaluate", {{"policy", eval_policy_name(policy)}},
                          {{"predictions", predictions_path}, {"judgments", judgments_path}});
  emit_report(out, out_path);
  return 0;
}

int do_grid_search(const EngineOptions& opt, const std::string& queries_path,
                   const std::string& judgments_path, const std::string& policy_name,
                   const std::string& objective_name,
                   const std::vector<std::string>& candidate_specs,
                   const std::string& out_path) {
  Taxonomy t = load_taxonomy_file(opt.taxonomy_path);
  ScorerBundle bundle = make_scorer(opt);
  std::vector<Query> queries = queries_from_file(queries_path);
  GroundTruth truth = ground_truth_from_file(judgments_path);
  EvalPolicy policy = eval_policy_from_name(policy_name);
  Aggregation objective = aggregation_from_name(objective_name);

  std::vector<std::pair<int, int>> candidates;
  for (const auto& spec : candidate_specs) {
    auto colon = spec.find(':');
    if (colon == std::string::npos) {
      throw ValidationError(ErrorCode::InvalidConfig,
                            "candidate must look like select:min, got " + spec);
    }
    try {
      candidates.emplace_back(std::stoi(spec.substr(0, colon)),
                              std::stoi(spec.substr(colon + 1)));
    } catch (const std::exception&) {
      throw ValidationError(ErrorCode::InvalidConfig, "bad candidate: " + spec);
    }
  }
  if (candidates.empty()) candidates = default_grid_candidates();

  auto run_point = [&](int s, int m) -> PredictionSets {
    ThresholdConfig cfg{s, m, opt.max_score};
    validate_config(cfg);
    std::vector<SearchResult> results =
        run_batch(queries, make_runner(t, bundle, cfg, opt.node_k), opt.workers);
    PredictionSets sets;
    for (const auto& r : results) {
      auto& leaves = sets[r.predictions.query_id];
      for (const auto& p : r.predictions.predictions) leaves.insert(p.leaf_id);
    }
    return sets;
  };

  GridSearchResult result = grid_search(run_point, truth, policy, objective, candidates);

  nlohmann::json cfg_echo{{"max_score", opt.max_score},
                          {"policy", eval_policy_name(policy)},
                          {"objective", aggregation_name(objective)},
                          {"scorer", bundle.echo}};
  if (opt.node_k > 0) cfg_echo["node_k"] = opt.node_k;
  nlohmann::json candidates_json = nlohmann::json::array();
  for (const auto& [s, m] : candidates) candidates_json.push_back({s, m});
  cfg_echo["candidates"] = candidates_json;

  auto inputs = bundle.inputs;
  inputs.emplace_back("taxonomy", opt.taxonomy_path);
  inputs.emplace_back("queries", queries_path);
  inputs.emplace_back("judgments", judgments_path);

  nlohmann::json out = grid_search_to_json(result);
  out["meta"] = make_meta("grid-search", cfg_echo, inputs);
  emit_report(out, out_path);
  return 0;
}

int do_pseudo_ref(const EngineOptions& opt, const std::string& queries_path,
                  const std::string& leaf_embeddings, int k, double min_cosine, int cutoff,
                  const std::string& out_path) {
  Taxonomy t = load_taxonomy_file(opt.taxonomy_path);
  if (opt.query_embeddings.empty()) {
    throw ValidationError(ErrorCode::InvalidConfig, "pseudo-ref needs --query-embeddings");
  }
  ScorerBundle bundle = make_scorer(opt);
  const EmbeddingStore& qstore = *bundle.query_store;
  EmbeddingStore leaf_store = EmbeddingStore::from_file(leaf_embeddings);
  std::vector<Query> queries = queries_from_file(queries_path);

  // queries are independent: judge each alone in parallel, merge in order
  std::function<GroundTruth(const Query&)> judge = [&](const Query& q) {
    return pseudo_reference({q}, qstore, t, leaf_store, *bundle.scorer, k, min_cosine, cutoff,
                            opt.max_score);
  };
  std::vector<GroundTruth> parts = parallel_map<GroundTruth>(queries, judge, opt.workers);
  GroundTruth truth;
  for (const auto& part : parts) {
    for (const auto& [query_id, leaves] : part.relevant()) {
      truth.register_query(query_id);
      (void)leaves;
    }
    for (const auto& [query_id, leaf_id] : part.judged()) {
      truth.add_judgment(query_id, leaf_id,
                         part.relevant().at(query_id).count(leaf_id) > 0);
    }
  }

  nlohmann::json cfg_echo{{"k", k},
                          {"min_cosine", min_cosine},
                          {"cutoff", cutoff},
                          {"max_score", opt.max_score},
                          {"scorer", bundle.echo}};
  auto inputs = bundle.inputs;
  inputs.emplace_back("taxonomy", opt.taxonomy_path);
  inputs.emplace_back("queries", queries_path);
  inputs.emplace_back("leaf_embeddings", leaf_embeddings);

  std::ostringstream body;
  body << nlohmann::json{{"meta", make_meta("pseudo-ref", cfg_echo, inputs)}}.dump() << "\n"
       << serialize_ground_truth(truth);
  atomic_write(out_path, body.str());
  std::cerr << "judged " << truth.judged().size() << " pairs over " << queries.size()
            << " queries\n";
  return 0;
}

int do_diagnose(const std::string& predictions_path, const std::string& query_embeddings,
                const std::string& leaf_embeddings, const std::string& taxonomy_path,
                const std::string& queries_path, double tau, size_t top_n,
                const std::string& out_path) {
  Taxonomy t = load_taxonomy_file(taxonomy_path);
  EmbeddingStore qstore = EmbeddingStore::from_file(query_embeddings);
  EmbeddingStore leaf_store = EmbeddingStore::from_file(leaf_embeddings);

  std::map<std::string, std::string> texts;
  if (!queries_path.empty()) {
    for (const auto& q : queries_from_file(queries_path)) texts[q.id] = q.text;
  }

  std::vector<PredictionSet> batch;
  nlohmann::json source_meta;
  for (const auto& rec : read_jsonl(predictions_path)) {
    if (rec.contains("meta")) {
      source_meta = rec.at("meta");
      continue;
    }
    batch.push_back(prediction_set_from_json(rec));
  }

  ThresholdConfig recorded{};
  if (source_meta.contains("config")) {
    const auto& cfg = source_meta.at("config");
    if (cfg.contains("select")) recorded.selection_threshold = cfg.at("select").get<int>();
    if (cfg.contains("min")) recorded.minimum_threshold = cfg.at("min").get<int>();
    if (cfg.contains("max_score")) recorded.max_score = cfg.at("max_score").get<int>();
  }
  UncoveredQuerySet uncovered = find_uncovered(batch, recorded);

  EmbeddingStore uncovered_store;
  for (const auto& id : uncovered.query_ids) {
    uncovered_store.insert(id, qstore.vector(id));
  }

  nlohmann::json clusters = nlohmann::json::array();
  if (uncovered_store.size() > 0) {
    for (const auto& cluster : cluster_queries(uncovered_store, tau, texts)) {
      clusters.push_back(gap_report_to_json(gap_report(cluster, t, leaf_store, top_n)));
    }
  }

  nlohmann::json report{
      {"uncovered_count", uncovered.query_ids.size()},
      {"uncovered", uncovered.query_ids},
      {"clusters", clusters},
  };
  if (!source_meta.is_null()) report["predictions_meta"] = source_meta;
  std::vector<std::pair<std::string, std::string>> inputs{
      {"predictions", predictions_path},
      {"query_embeddings", query_embeddings},
      {"leaf_embeddings", leaf_embeddings},
      {"taxonomy", taxonomy_path}};
  if (!queries_path.empty()) inputs.emplace_back("queries", queries_path);
  report["meta"] = make_meta("diagnose", {{"tau", tau}, {"top_n", top_n}}, inputs);
  emit_report(report, out_path);
  return 0;
}

bool has_flag(const std::vector<std::string>& args, const std::string& flag) {
  for (const auto& a : args) {
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

// Environment variables slot in between flags and config files: a set
// variable is appended as a flag unless the flag was given explicitly, which
// beats config-file values (those only fill options nothing else touched).
std::vector<std::string> apply_env(std::vector<std::string> args,
                                   const std::map<std::string, CLI::App*>& subcommands) {
  static constexpr std::pair<const char*, const char*> kEnvFlags[] = {
      {"TAXONAV_TAXONOMY", "--taxonomy"},
      {"TAXONAV_SCORER", "--scorer"},
      {"TAXONAV_CACHE", "--cache"},
      {"TAXONAV_WORKERS", "--workers"},
  };
  CLI::App* sub = nullptr;
  for (const auto& a : args) {
    auto it = subcommands.find(a);
    if (it != subcommands.end()) {
      sub = it->second;
      break;
    }
  }
  if (sub == nullptr) return args;
  for (const auto& [env, flag] : kEnvFlags) {
    const char* value = std::getenv(env);
    if (value == nullptr || *value == '\0') continue;
    if (has_flag(args, flag)) continue;
    if (sub->get_option_no_throw(flag) == nullptr) continue;
    args.emplace_back(flag);
    args.emplace_back(value);
  }
  return args;
}

}  // namespace

std::string render_trace_tree(const CategorizationTrace& trace, const Taxonomy& taxonomy) {
  std::ostringstream out;
  out << "query: " << trace.query << "\n";
  if (trace.context.kind != ContextKind::none) {
    out << "context: " << context_kind_name(trace.context.kind) << " \"" << trace.context.text
        << "\"\n";
  }
  out << "thresholds: select=" << trace.config.selection_threshold
      << " min=" << trace.config.minimum_threshold << " max=" << trace.config.max_score << "\n";

  for (const auto& step : trace.steps) {
    size_t depth = path_to_root(taxonomy, step.parent_id).size() - 1;
    std::string head(2 * depth, ' ');
    std::string tail(2 * (depth + 1), ' ');
    out << head << "+ " << taxonomy.node(step.parent_id).name << "\n";
    for (const auto& d : step.children) {
      char z[16];
      std::snprintf(z, sizeof z, "%.2f", d.z);
      out << tail << taxonomy.node(d.node_id).name << "  score=" << d.raw_score << "  z=" << z
          << "  ";
      if (d.kept) {
        out << "kept";
      } else {
        out << "pruned(" << prune_reason_name(d.prune_reason) << ")";
      }
      out << "\n";
    }
  }

  out << "final leaf scores:\n";
  for (const auto& [leaf_id, score] : trace.leaf_scores) {
    out << "  " << taxonomy.node(leaf_id).name << "  final=" << score << "  "
        << (score >= trace.config.minimum_threshold ? "predicted" : "dropped") << "\n";
  }
  return out.str();
}

int run_command(const std::vector<std::string>& args) {
  CLI::App app{"hierarchical query categorization over an e-commerce taxonomy"};
  app.require_subcommand(1);
  app.set_config("--config", "", "JSON config file (flags and environment take precedence)");
  app.config_formatter(std::make_shared<JsonConfig>());
  app.failure_message(CLI::FailureMessage::help);

  int exit_code = 0;

  // validate-taxonomy
  auto* validate = app.add_subcommand("validate-taxonomy", "check structural invariants");
  auto validate_taxonomy_path = std::make_shared<std::string>();
  validate->add_option("--taxonomy", *validate_taxonomy_path, "taxonomy JSONL file")->required();
  validate->callback([&exit_code, validate_taxonomy_path] {
    exit_code = do_validate(*validate_taxonomy_path);
  });

  // categorize
  auto* cat = app.add_subcommand("categorize", "categorize a single query");
  auto cat_opt = std::make_shared<EngineOptions>();
  cat_opt->add_scorer_flags(cat);
  cat_opt->add_threshold_flags(cat);
  auto cat_query = std::make_shared<std::string>();
  auto cat_query_id = std::make_shared<std::string>();
  auto cat_intent = std::make_shared<std::string>();
  auto cat_context = std::make_shared<std::string>();
  auto cat_render = std::make_shared<bool>(false);
  auto cat_out = std::make_shared<std::string>();
  auto cat_trace_out = std::make_shared<std::string>();
  cat->add_option("--query", *cat_query, "query text")->required();
  cat->add_option("--query-id", *cat_query_id, "query id (defaults to the text)");
  cat->add_option("--intent", *cat_intent, "buyer intent context phrase");
  cat->add_option("--context", *cat_context, "free-text context phrase");
  cat->add_flag("--render-tree", *cat_render, "print the search tree");
  cat->add_option("--out", *cat_out, "write predictions JSONL here");
  cat->add_option("--trace-out", *cat_trace_out, "write the trace JSONL here");
  cat->callback([=, &exit_code] {
    exit_code = do_categorize(*cat_opt, *cat_query, *cat_query_id, *cat_intent, *cat_context,
                              *cat_render, *cat_out, *cat_trace_out);
  });

  // batch
  auto* batch = app.add_subcommand("batch", "categorize a JSONL file of queries");
  auto batch_opt = std::make_shared<EngineOptions>();
  batch_opt->add_scorer_flags(batch);
  batch_opt->add_threshold_flags(batch);
  auto batch_queries = std::make_shared<std::string>();
  auto batch_out = std::make_shared<std::string>();
  auto batch_trace_out = std::make_shared<std::string>();
  batch->add_option("--queries", *batch_queries, "queries JSONL file")->required();
  batch->add_option("--out", *batch_out, "predictions JSONL output")->required();
  batch->add_option("--trace-out", *batch_trace_out, "traces JSONL output");
  batch->add_option("--workers", batch_opt->workers, "worker threads (default: hardware)");
  batch->callback([=, &exit_code] {
    exit_code = do_batch(*batch_opt, *batch_queries, *batch_out, *batch_trace_out);
  });

  // baseline
  auto* base = app.add_subcommand("baseline", "k-NN categorization over leaf embeddings");
  auto base_opt = std::make_shared<EngineOptions>();
  auto base_queries = std::make_shared<std::string>();
  auto base_qemb = std::make_shared<std::string>();
  auto base_lemb = std::make_shared<std::string>();
  auto base_k = std::make_shared<size_t>(10);
  auto base_max = std::make_shared<int>(10);
  auto base_cutoff = std::make_shared<int>(0);
  auto base_out = std::make_shared<std::string>();
  auto base_workers = std::make_shared<unsigned>(0);
  base->add_option("--queries", *base_queries, "queries JSONL file")->required();
  base->add_option("--query-embeddings", *base_qemb, "query embedding JSONL")->required();
  base->add_option("--leaf-embeddings", *base_lemb, "leaf embedding JSONL")->required();
  base->add_option("--k", *base_k, "neighbors per query");
  base->add_option("--max-score", *base_max, "scoring scale ceiling R");
  base->add_option("--rescore-cutoff", *base_cutoff,
                   "re-score retrieved leaves with --scorer and keep those at or above this");
  base->add_option("--taxonomy", base_opt->taxonomy_path, "taxonomy JSONL (rescore mode)");
  base->add_option("--scorer", base_opt->scorer_kind, "mock | embedding | remote (rescore mode)");
  base->add_option("--mock-table", base_opt->mock_table, "mock scorer table (JSON)");
  base->add_option("--node-embeddings", base_opt->node_embeddings, "node embedding JSONL");
  base->add_option("--remote-config", base_opt->remote_config, "remote scorer config (JSON)");
  base->add_option("--cache", base_opt->cache_path, "score cache file (remote scorer)");
  base->add_option("--out", *base_out, "predictions JSONL output (default: stdout)");
  base->add_option("--workers", *base_workers, "worker threads (default: hardware)");
  base->callback([=, &exit_code] {
    base_opt->query_embeddings = *base_qemb;
    base_opt->max_score = *base_max;
    exit_code = do_baseline(*base_queries, *base_qemb, *base_lemb, *base_k, *base_max,
                            *base_cutoff, *base_opt, *base_out, *base_workers);
  });

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "score predictions against judgments");
  auto eval_predictions = std::make_shared<std::string>();
  auto eval_judgments = std::make_shared<std::string>();
  auto eval_policy = std::make_shared<std::string>("judged-only");
  auto eval_out = std::make_shared<std::string>();
  eval->add_option("--predictions", *eval_predictions, "predictions JSONL")->required();
  eval->add_option("--judgments", *eval_judgments, "judgments JSONL")->required();
  eval->add_option("--policy", *eval_policy, "judged-only | open-world");
  eval->add_option("--out", *eval_out, "report JSON output (default: stdout)");
  eval->callback([=, &exit_code] {
    exit_code = do_evaluate(*eval_predictions, *eval_judgments, *eval_policy, *eval_out);
  });

  // grid-search
  auto* grid = app.add_subcommand("grid-search", "pick thresholds by F1 against judgments");
  auto grid_opt = std::make_shared<EngineOptions>();
  grid_opt->add_scorer_flags(grid);
  grid->add_option("--max-score", grid_opt->max_score, "scoring scale ceiling R");
  grid->add_option("--node-k", grid_opt->node_k, "k-NN prefilter width");
  auto grid_queries = std::make_shared<std::string>();
  auto grid_judgments = std::make_shared<std::string>();
  auto grid_policy = std::make_shared<std::string>("judged-only");
  auto grid_objective = std::make_shared<std::string>("samples");
  auto grid_candidates = std::make_shared<std::vector<std::string>>();
  auto grid_out = std::make_shared<std::string>();
  grid->add_option("--queries", *grid_queries, "queries JSONL file")->required();
  grid->add_option("--judgments", *grid_judgments, "judgments JSONL")->required();
  grid->add_option("--policy", *grid_policy, "judged-only | open-world");
  grid->add_option("--objective", *grid_objective, "samples | micro | macro");
  grid->add_option("--candidates", *grid_candidates,
                   "threshold pairs as select:min (default 8:7 9:7 9:8)");
  grid->add_option("--workers", grid_opt->workers, "worker threads (default: hardware)");
  grid->add_option("--out", *grid_out, "report JSON output (default: stdout)");
  grid->callback([=, &exit_code] {
    exit_code = do_grid_search(*grid_opt, *grid_queries, *grid_judgments, *grid_policy,
                               *grid_objective, *grid_candidates, *grid_out);
  });

  // pseudo-ref
  auto* pseudo = app.add_subcommand("pseudo-ref", "machine-judged reference via k-NN + scorer");
  auto pseudo_opt = std::make_shared<EngineOptions>();
  pseudo_opt->add_scorer_flags(pseudo);
  pseudo->add_option("--max-score", pseudo_opt->max_score, "scoring scale ceiling R");
  auto pseudo_queries = std::make_shared<std::string>();
  auto pseudo_lemb = std::make_shared<std::string>();
  auto pseudo_k = std::make_shared<int>(100);
  auto pseudo_min_cos = std::make_shared<double>(0.01);
  auto pseudo_cutoff = std::make_shared<int>(7);
  auto pseudo_out = std::make_shared<std::string>();
  pseudo->add_option("--queries", *pseudo_queries, "queries JSONL file")->required();
  pseudo->add_option("--leaf-embeddings", *pseudo_lemb, "leaf embedding JSONL")->required();
  pseudo->add_option("--k", *pseudo_k, "candidate pool size per query");
  pseudo->add_option("--min-cosine", *pseudo_min_cos, "drop candidates below this cosine");
  pseudo->add_option("--cutoff", *pseudo_cutoff, "relevance binarization cutoff");
  pseudo->add_option("--workers", pseudo_opt->workers, "worker threads (default: hardware)");
  pseudo->add_option("--out", *pseudo_out, "judgments JSONL output")->required();
  pseudo->callback([=, &exit_code] {
    exit_code = do_pseudo_ref(*pseudo_opt, *pseudo_queries, *pseudo_lemb, *pseudo_k,
                              *pseudo_min_cos, *pseudo_cutoff, *pseudo_out);
  });

  // diagnose
  auto* diag = app.add_subcommand("diagnose", "cluster uncovered queries and report gaps");
  auto diag_predictions = std::make_shared<std::string>();
  auto diag_qemb = std::make_shared<std::string>();
  auto diag_lemb = std::make_shared<std::string>();
  auto diag_taxonomy = std::make_shared<std::string>();
  auto diag_queries = std::make_shared<std::string>();
  auto diag_tau = std::make_shared<double>(0.85);
  auto diag_top_n = std::make_shared<size_t>(5);
  auto diag_out = std::make_shared<std::string>();
  diag->add_option("--predictions", *diag_predictions, "predictions JSONL")->required();
  diag->add_option("--query-embeddings", *diag_qemb, "query embedding JSONL")->required();
  diag->add_option("--leaf-embeddings", *diag_lemb, "leaf embedding JSONL")->required();
  diag->add_option("--taxonomy", *diag_taxonomy, "taxonomy JSONL file")->required();
  diag->add_option("--queries", *diag_queries, "queries JSONL, used to label clusters");
  diag->add_option("--tau", *diag_tau, "cosine threshold for clustering");
  diag->add_option("--top-n", *diag_top_n, "nearest leaves per cluster");
  diag->add_option("--out", *diag_out, "report JSON output (default: stdout)");
  diag->callback([=, &exit_code] {
    exit_code = do_diagnose(*diag_predictions, *diag_qemb, *diag_lemb, *diag_taxonomy,
                            *diag_queries, *diag_tau, *diag_top_n, *diag_out);
  });

  std::map<std::string, CLI::App*> by_name{
      {"validate-taxonomy", validate}, {"categorize", cat}, {"batch", batch},
      {"baseline", base},              {"evaluate", eval},  {"grid-search", grid},
      {"pseudo-ref", pseudo},          {"diagnose", diag},
  };

  try {
    std::vector<std::string> expanded = apply_env(args, by_name);
    std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const RuntimeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return exit_code;
}

int run_command(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_command(args);
}

}  // namespace taxonav
