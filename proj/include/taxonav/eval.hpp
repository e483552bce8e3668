#pragma once

#include <json.hpp>

#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "taxonav/knn.hpp"
#include "taxonav/scoring.hpp"
#include "taxonav/search.hpp"
#include "taxonav/taxonomy.hpp"

namespace taxonav {

// Relevance judgments. Every query ever judged (or deliberately registered
// with no judgments) is a key of `relevant`; `judged` holds every
// (query, leaf) pair a judgment exists for, relevant or not.
class GroundTruth {
 public:
  void register_query(const std::string& query_id);
  void add_judgment(const std::string& query_id, const std::string& leaf_id, bool relevant);

  bool knows(const std::string& query_id) const;
  const std::map<std::string, std::set<std::string>>& relevant() const { return relevant_; }
  const std::set<std::pair<std::string, std::string>>& judged() const { return judged_; }

 private:
  std::map<std::string, std::set<std::string>> relevant_;
  std::set<std::pair<std::string, std::string>> judged_;
};

GroundTruth ground_truth_from_records(const std::vector<nlohmann::json>& records);
GroundTruth ground_truth_from_file(const std::string& path);
std::string serialize_ground_truth(const GroundTruth& truth);

using PredictionSets = std::map<std::string, std::set<std::string>>;

PredictionSets prediction_sets_from_file(const std::string& path);

enum class EvalPolicy { judged_only, open_world };
std::string eval_policy_name(EvalPolicy policy);
EvalPolicy eval_policy_from_name(const std::string& name);

struct PairClassification {
  std::set<std::pair<std::string, std::string>> tp, fp, fn;
  long unjudged = 0;
};

PairClassification confusion(const PredictionSets& predictions, const GroundTruth& truth,
                             EvalPolicy policy);

struct MetricSlice {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

struct MetricsReport {
  MetricSlice micro, samples, macro;
  long tp = 0, fp = 0, fn = 0, unjudged = 0;
  EvalPolicy policy = EvalPolicy::judged_only;
};

MetricsReport compute_metrics(const PredictionSets& predictions, const GroundTruth& truth,
                              EvalPolicy policy);
nlohmann::json metrics_to_json(const MetricsReport& report);

enum class Aggregation { micro, samples, macro };
std::string aggregation_name(Aggregation a);
Aggregation aggregation_from_name(const std::string& name);

struct GridPoint {
  int selection = 0;
  int minimum = 0;
  double samples_f1 = 0;
  double micro_f1 = 0;
  double macro_f1 = 0;
};

struct GridSearchResult {
  std::vector<GridPoint> points;
  int chosen_selection = 0;
  int chosen_minimum = 0;
};

std::vector<std::pair<int, int>> default_grid_candidates();

// `run` produces the prediction sets for one (selection, minimum) pair;
// candidates must satisfy selection > minimum >= 6.
GridSearchResult grid_search(const std::function<PredictionSets(int, int)>& run,
                             const GroundTruth& truth, EvalPolicy policy, Aggregation objective,
                             const std::vector<std::pair<int, int>>& candidates =
                                 default_grid_candidates());
nlohmann::json grid_search_to_json(const GridSearchResult& result);

// Builds machine-generated judgments: per query, retrieve the k nearest
// leaves, drop those with cosine below min_cosine, re-score the survivors
// with the strong scorer in leaf phase, and binarize at relevance_cutoff.
// Every query is registered as judged even when nothing survives the filter.
GroundTruth pseudo_reference(const std::vector<Query>& queries,
                             const EmbeddingStore& query_vectors, const Taxonomy& taxonomy,
                             const EmbeddingStore& leaf_store, SemanticScorer& strong_scorer,
                             int k = 100, double min_cosine = 0.01, int relevance_cutoff = 7,
                             int max_score = 10);

struct MannWhitneyResult {
  double u = 0;
  double p = 1;
};

MannWhitneyResult mann_whitney_u(const std::vector<double>& sample_a,
                                 const std::vector<double>& sample_b);

}  // namespace taxonav
