#pragma once

#include <map>
#include <string>
#include <vector>

#include "taxonav/knn.hpp"
#include "taxonav/predictions.hpp"
#include "taxonav/scoring.hpp"
#include "taxonav/taxonomy.hpp"

namespace taxonav {

struct ThresholdConfig {
  int selection_threshold = 9;  // relative cutoff strength, applied as mean + (s/R)*stddev
  int minimum_threshold = 8;    // absolute floor on kept and final scores
  int max_score = 10;
};

// Throws ValidationError(InvalidConfig) unless 1 <= s <= R and 1 <= m <= R.
void validate_config(const ThresholdConfig& config);

enum class PruneReason {
  none,                   // kept
  below_relative_cutoff,  // under mean + (s/R)*stddev of siblings
  below_minimum,          // passed the relative cutoff but under the absolute floor
  filtered_out,           // dropped by the k-NN prefilter before scoring
  scoring_failed,         // scorer error; subtree abandoned
};
const char* prune_reason_name(PruneReason reason);

struct NodeDecision {
  std::string node_id;
  // The score the pruning statistics used: the scorer's value, 1 (the scale
  // floor) for prefiltered children, 0 when scoring failed.
  int raw_score = 0;
  double z = 0.0;  // standardized among siblings; 0 when stddev is 0 or no score exists
  bool kept = false;
  PruneReason prune_reason = PruneReason::none;
};

struct ExpansionStep {
  std::string parent_id;
  std::vector<NodeDecision> children;  // input child order
};

struct Query {
  std::string id;
  std::string text;
  QueryContext context;
};

struct CategorizationTrace {
  std::string query_id;
  std::string query;
  QueryContext context;
  ThresholdConfig config;
  std::vector<ExpansionStep> steps;
  std::map<std::string, int> leaf_scores;  // final leaf-phase re-scores (0 = scoring failed)
  int scorer_call_count = 0;               // tree- plus leaf-phase attempts
  int visited_node_count = 0;              // distinct nodes that received a tree-phase score
};

nlohmann::json trace_to_json(const CategorizationTrace& trace);

struct SearchResult {
  PredictionSet predictions;
  CategorizationTrace trace;
};

// Classifies sibling scores: with stddev > 0 a score survives iff it is at
// least mean + (s/R)*stddev and at least m; with stddev = 0 only the absolute
// floor applies. node_id is left empty for the caller to fill.
// Throws ValidationError(EmptyChildList) on empty input.
std::vector<NodeDecision> relative_prune(const std::vector<int>& scores,
                                         const ThresholdConfig& config);

// Level-wise tree search: scores all children of each kept node, prunes with
// relative_prune, then re-scores every surviving leaf with a leaf-phase
// request over its full root-to-leaf path and keeps those scoring at least m.
// A scoring failure prunes that subtree and is recorded in the trace.
SearchResult cot_bfs(const Query& q, const Taxonomy& t, SemanticScorer& scorer,
                     const ThresholdConfig& config);

// cot_bfs with a k-NN prefilter: at each expansion only the node_k children
// whose embeddings are nearest the query vector get scored. Filtered-out
// children still enter the sibling statistics at the scale floor of 1, so the
// surviving set degrades gracefully toward cot_bfs as node_k grows, and
// matches it exactly once node_k reaches the fanout.
SearchResult cot_knn_hybrid_bfs(const Query& q, const Taxonomy& t, SemanticScorer& scorer,
                                const ThresholdConfig& config, const EmbeddingStore& node_store,
                                const std::vector<float>& query_vec, size_t node_k);

// Flat alternative: top-k leaves by cosine, each leaf-phase scored, keeping
// scores at least relevance_cutoff. Scorer errors propagate.
PredictionSet knn_then_score(const Query& q, const std::vector<float>& query_vec,
                             const Taxonomy& t, const EmbeddingStore& leaf_store, size_t k,
                             SemanticScorer& scorer, int relevance_cutoff, int max_score = 10);

// visited_node_count over the non-root node count (the root is never scored).
double visited_fraction(const CategorizationTrace& trace, const Taxonomy& t);

}  // namespace taxonav
