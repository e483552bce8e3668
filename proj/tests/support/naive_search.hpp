#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "taxonav/errors.hpp"
#include "taxonav/predictions.hpp"
#include "taxonav/scoring.hpp"
#include "taxonav/search.hpp"
#include "taxonav/taxonomy.hpp"

namespace taxonav::testing {

// Reference implementation of the tree search, kept deliberately simple and
// structurally different from the engine: depth-first recursion, long-double
// statistics via the E[x^2] - mu^2 identity, and no trace machinery. Used to
// cross-check PredictionSets and kept/pruned decisions.

struct NaiveDecision {
  int score = 0;  // 0 when the scoring call failed
  bool kept = false;
};

struct NaiveOutcome {
  std::vector<Prediction> predictions;          // canonical order
  std::map<std::string, NaiveDecision> decisions;  // every tree-phase attempt
};

inline NaiveOutcome naive_categorize(const Query& q, const Taxonomy& t, SemanticScorer& scorer,
                                     const ThresholdConfig& cfg) {
  NaiveOutcome out;
  std::vector<std::string> surviving_leaves;

  auto request = [&](const std::string& node_id, ScorePhase phase) {
    ScoreRequest req;
    req.query_id = q.id;
    req.query = q.text;
    req.path_text = render_path(path_to_root(t, node_id), t);
    const CategoryNode& node = t.node(node_id);
    req.parent_name = node.parent_id ? t.node(*node.parent_id).name : node.name;
    req.node_name = node.name;
    req.node_id = node_id;
    req.description = node.description;
    req.context = q.context;
    req.max_score = cfg.max_score;
    req.phase = phase;
    return req;
  };

  std::function<void(const std::string&)> expand = [&](const std::string& parent) {
    const auto& kids = t.children(parent);
    if (kids.empty()) return;

    std::vector<std::optional<int>> vals(kids.size());
    for (size_t i = 0; i < kids.size(); ++i) {
      try {
        vals[i] = scorer.score(request(kids[i], ScorePhase::tree)).value;
      } catch (const RuntimeError&) {
        vals[i] = std::nullopt;
      }
    }

    long double sum = 0.0L, sumsq = 0.0L;
    int n = 0;
    for (const auto& v : vals) {
      if (!v) continue;
      sum += *v;
      sumsq += (long double)(*v) * (*v);
      ++n;
    }

    for (size_t i = 0; i < kids.size(); ++i) {
      NaiveDecision d;
      if (!vals[i]) {
        out.decisions[kids[i]] = d;
        continue;
      }
      d.score = *vals[i];
      long double mean = sum / n;
      long double var = sumsq / n - mean * mean;
      if (var < 0) var = 0;
      long double sd = sqrtl(var);
      if (sd > 0) {
        long double cutoff =
            mean + (long double)cfg.selection_threshold / cfg.max_score * sd;
        d.kept = (long double)d.score >= cutoff && d.score >= cfg.minimum_threshold;
      } else {
        d.kept = d.score >= cfg.minimum_threshold;
      }
      out.decisions[kids[i]] = d;
      if (d.kept) {
        if (t.is_leaf(kids[i])) surviving_leaves.push_back(kids[i]);
        else expand(kids[i]);
      }
    }
  };

  expand(t.root_id());

  for (const auto& leaf : surviving_leaves) {
    int v = 0;
    try {
      v = scorer.score(request(leaf, ScorePhase::leaf)).value;
    } catch (const RuntimeError&) {
      v = 0;
    }
    if (v >= cfg.minimum_threshold) out.predictions.push_back({leaf, v});
  }
  sort_predictions(out.predictions);
  return out;
}

}  // namespace taxonav::testing
