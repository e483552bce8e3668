#include "taxonav/search.hpp"

#include <algorithm>
#include <cmath>

#include "taxonav/errors.hpp"

namespace taxonav {

void validate_config(const ThresholdConfig& config) {
  int r = config.max_score;
  if (r < 2) throw ValidationError(ErrorCode::InvalidConfig, "max_score must be at least 2");
  if (config.selection_threshold < 1 || config.selection_threshold > r) {
    throw ValidationError(ErrorCode::InvalidConfig,
                          "selection_threshold must lie in [1," + std::to_string(r) + "]");
  }
  if (config.minimum_threshold < 1 || config.minimum_threshold > r) {
    throw ValidationError(ErrorCode::InvalidConfig,
                          "minimum_threshold must lie in [1," + std::to_string(r) + "]");
  }
}

const char* prune_reason_name(PruneReason reason) {
  switch (reason) {
    case PruneReason::none: return "none";
    case PruneReason::below_relative_cutoff: return "below_relative_cutoff";
    case PruneReason::below_minimum: return "below_minimum";
    case PruneReason::filtered_out: return "filtered_out";
    case PruneReason::scoring_failed: return "scoring_failed";
  }
  return "none";
}

namespace {

struct ChildOutcome {
  enum State { scored, imputed, failed } state;
  int value = 0;  // scorer value, or 1 for imputed
};

// Shared pruning core. Statistics run over scored and imputed entries; failed
// entries contribute nothing. Only scored entries can be kept.
std::vector<NodeDecision> prune_outcomes(const std::vector<ChildOutcome>& outcomes,
                                         const ThresholdConfig& config) {
  double sum = 0.0;
  size_t n = 0;
  for (const auto& o : outcomes) {
    if (o.state == ChildOutcome::failed) continue;
    sum += o.value;
    ++n;
  }
  double mu = 0.0, sigma = 0.0;
  if (n > 0) {
    mu = sum / double(n);
    double sq = 0.0;
    for (const auto& o : outcomes) {
      if (o.state == ChildOutcome::failed) continue;
      double d = o.value - mu;
      sq += d * d;
    }
    sigma = std::sqrt(sq / double(n));
  }
  double cutoff = mu + (double(config.selection_threshold) / config.max_score) * sigma;

  std::vector<NodeDecision> decisions;
  decisions.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    NodeDecision d;
    switch (o.state) {
      case ChildOutcome::failed:
        d.raw_score = 0;
        d.z = 0.0;
        d.kept = false;
        d.prune_reason = PruneReason::scoring_failed;
        break;
      case ChildOutcome::imputed:
        d.raw_score = o.value;
        d.z = sigma > 0.0 ? (o.value - mu) / sigma : 0.0;
        d.kept = false;
        d.prune_reason = PruneReason::filtered_out;
        break;
      case ChildOutcome::scored:
        d.raw_score = o.value;
        d.z = sigma > 0.0 ? (o.value - mu) / sigma : 0.0;
        if (sigma > 0.0 && o.value < cutoff) {
          d.kept = false;
          d.prune_reason = PruneReason::below_relative_cutoff;
        } else if (o.value < config.minimum_threshold) {
          d.kept = false;
          d.prune_reason = PruneReason::below_minimum;
        } else {
          d.kept = true;
          d.prune_reason = PruneReason::none;
        }
        break;
    }
    decisions.push_back(d);
  }
  return decisions;
}

ScoreRequest make_request(const Query& q, const Taxonomy& t, const std::string& node_id,
                          const ThresholdConfig& config, ScorePhase phase) {
  const CategoryNode& node = t.node(node_id);
  ScoreRequest req;
  req.query_id = q.id;
  req.query = q.text;
  req.path_text = render_path(path_to_root(t, node_id), t);
  req.parent_name = node.parent_id ? t.node(*node.parent_id).name : node.name;
  req.node_name = node.name;
  req.node_id = node.id;
  req.description = node.description;
  req.context = q.context;
  req.max_score = config.max_score;
  req.phase = phase;
  return req;
}

int checked_score(SemanticScorer& scorer, const ScoreRequest& req) {
  int v = scorer.score(req).value;
  if (v < 1 || v > req.max_score) {
    throw ValidationError(ErrorCode::InvalidConfig,
                          "scorer returned " + std::to_string(v) + " outside [1," +
                              std::to_string(req.max_score) + "]");
  }
  return v;
}

SearchResult run_bfs(const Query& q, const Taxonomy& t, SemanticScorer& scorer,
                     const ThresholdConfig& config, const EmbeddingStore* node_store,
                     const std::vector<float>* query_vec, size_t node_k) {
  validate_config(config);

  SearchResult result;
  result.predictions.query_id = q.id;
  CategorizationTrace& trace = result.trace;
  trace.query_id = q.id;
  trace.query = q.text;
  trace.context = q.context;
  trace.config = config;

  std::vector<std::string> frontier;
  if (!t.children(t.root_id()).empty()) frontier.push_back(t.root_id());
  std::vector<std::string> candidates;

  while (!frontier.empty()) {
    std::vector<std::string> next;
    for (const auto& parent : frontier) {
      const auto& children = t.children(parent);

      std::vector<bool> selected(children.size(), true);
      if (node_store && node_k < children.size()) {
        // Keep only the node_k children nearest the query vector.
        std::vector<size_t> order(children.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::vector<double> cos(children.size());
        for (size_t i = 0; i < children.size(); ++i) {
          cos[i] = cosine(*query_vec, node_store->vector(children[i]));
        }
        std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
          if (cos[a] != cos[b]) return cos[a] > cos[b];
          return children[a] < children[b];
        });
        selected.assign(children.size(), false);
        for (size_t r = 0; r < node_k; ++r) selected[order[r]] = true;
      }

      std::vector<ChildOutcome> outcomes(children.size());
      for (size_t i = 0; i < children.size(); ++i) {
        if (!selected[i]) {
          outcomes[i] = {ChildOutcome::imputed, 1};
          continue;
        }
        ++trace.scorer_call_count;
        try {
          int v = checked_score(scorer, make_request(q, t, children[i], config, ScorePhase::tree));
          outcomes[i] = {ChildOutcome::scored, v};
          ++trace.visited_node_count;
        } catch (const RuntimeError&) {
          outcomes[i] = {ChildOutcome::failed, 0};
        }
      }

      ExpansionStep step;
      step.parent_id = parent;
      step.children = prune_outcomes(outcomes, config);
      for (size_t i = 0; i < children.size(); ++i) {
        step.children[i].node_id = children[i];
        if (step.children[i].kept) {
          if (t.is_leaf(children[i])) candidates.push_back(children[i]);
          else next.push_back(children[i]);
        }
      }
      trace.steps.push_back(std::move(step));
    }
    frontier = std::move(next);
  }

  for (const auto& leaf : candidates) {
    ++trace.scorer_call_count;
    int v = 0;
    try {
      v = checked_score(scorer, make_request(q, t, leaf, config, ScorePhase::leaf));
    } catch (const RuntimeError&) {
      v = 0;  // failed re-score drops the leaf
    }
    trace.leaf_scores[leaf] = v;
    if (v >= config.minimum_threshold) result.predictions.predictions.push_back({leaf, v});
  }
  sort_predictions(result.predictions.predictions);
  return result;
}

}  // namespace

std::vector<NodeDecision> relative_prune(const std::vector<int>& scores,
                                         const ThresholdConfig& config) {
  validate_config(config);
  if (scores.empty()) throw ValidationError(ErrorCode::EmptyChildList, "no sibling scores");
  std::vector<ChildOutcome> outcomes;
  outcomes.reserve(scores.size());
  for (int s : scores) {
    if (s < 1 || s > config.max_score) {
      throw ValidationError(ErrorCode::InvalidInput,
                            "score " + std::to_string(s) + " outside [1," +
                                std::to_string(config.max_score) + "]");
    }
    outcomes.push_back({ChildOutcome::scored, s});
  }
  return prune_outcomes(outcomes, config);
}

SearchResult cot_bfs(const Query& q, const Taxonomy& t, SemanticScorer& scorer,
                     const ThresholdConfig& config) {
  return run_bfs(q, t, scorer, config, nullptr, nullptr, 0);
}

SearchResult cot_knn_hybrid_bfs(const Query& q, const Taxonomy& t, SemanticScorer& scorer,
                                const ThresholdConfig& config, const EmbeddingStore& node_store,
                                const std::vector<float>& query_vec, size_t node_k) {
  if (node_k < 1) throw ValidationError(ErrorCode::InvalidConfig, "node_k must be at least 1");
  return run_bfs(q, t, scorer, config, &node_store, &query_vec, node_k);
}

PredictionSet knn_then_score(const Query& q, const std::vector<float>& query_vec,
                             const Taxonomy& t, const EmbeddingStore& leaf_store, size_t k,
                             SemanticScorer& scorer, int relevance_cutoff, int max_score) {
  if (k < 1) throw ValidationError(ErrorCode::InvalidConfig, "k must be at least 1");
  if (leaf_store.size() == 0) throw ValidationError(ErrorCode::EmptyStore, "empty leaf store");
  if (relevance_cutoff < 1 || relevance_cutoff > max_score) {
    throw ValidationError(ErrorCode::InvalidConfig,
                          "relevance_cutoff must lie in [1," + std::to_string(max_score) + "]");
  }
  ThresholdConfig config;
  config.minimum_threshold = relevance_cutoff;
  config.max_score = max_score;

  PredictionSet out;
  out.query_id = q.id;
  for (const auto& n : top_k(query_vec, leaf_store, k)) {
    int v = checked_score(scorer, make_request(q, t, n.id, config, ScorePhase::leaf));
    if (v >= relevance_cutoff) out.predictions.push_back({n.id, v});
  }
  sort_predictions(out.predictions);
  return out;
}

double visited_fraction(const CategorizationTrace& trace, const Taxonomy& t) {
  if (t.size() <= 1) return 0.0;
  return double(trace.visited_node_count) / double(t.size() - 1);
}

nlohmann::json trace_to_json(const CategorizationTrace& trace) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& step : trace.steps) {
    nlohmann::json children = nlohmann::json::array();
    for (const auto& d : step.children) {
      children.push_back({{"node_id", d.node_id},
                          {"raw_score", d.raw_score},
                          {"z", d.z},
                          {"kept", d.kept},
                          {"prune_reason", prune_reason_name(d.prune_reason)}});
    }
    steps.push_back({{"parent_id", step.parent_id}, {"children", children}});
  }
  nlohmann::json context;
  if (trace.context.kind == ContextKind::none) {
    context = nullptr;
  } else {
    context = {{"kind", context_kind_name(trace.context.kind)}, {"text", trace.context.text}};
  }
  return {{"query_id", trace.query_id},
          {"query", trace.query},
          {"context", context},
          {"config",
           {{"selection_threshold", trace.config.selection_threshold},
            {"minimum_threshold", trace.config.minimum_threshold},
            {"max_score", trace.config.max_score}}},
          {"steps", steps},
          {"leaf_scores", trace.leaf_scores},
          {"scorer_call_count", trace.scorer_call_count},
          {"visited_node_count", trace.visited_node_count}};
}

}  // namespace taxonav
