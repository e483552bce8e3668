#pragma once

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

#include "taxonav/knn.hpp"
#include "taxonav/predictions.hpp"
#include "taxonav/search.hpp"
#include "taxonav/taxonomy.hpp"

namespace taxonav {

struct UncoveredQuerySet {
  ThresholdConfig config;
  std::vector<std::string> query_ids;  // input order
};

// Queries whose prediction list came back empty under the recorded config.
UncoveredQuerySet find_uncovered(const std::vector<PredictionSet>& batch,
                                 const ThresholdConfig& config);

struct QueryCluster {
  std::vector<std::string> members;  // sorted ascending
  std::vector<float> centroid;       // renormalized mean of member vectors
  std::string label;                 // text (or id) of the member nearest the centroid
};

// Connected components of the graph linking query pairs whose cosine
// similarity reaches tau. Components are ordered by their smallest member id.
// `texts` optionally maps ids to display text for labels; absent ids label
// with the id itself.
std::vector<QueryCluster> cluster_queries(const EmbeddingStore& vectors, double tau,
                                          const std::map<std::string, std::string>& texts = {});

struct LeafNeighbor {
  std::string leaf_id;
  std::string path;
  int depth = 0;  // edges below the root
  double cosine = 0.0;
};

struct GapReport {
  std::string label;
  std::vector<std::string> members;
  std::vector<LeafNeighbor> nearest;
};

// Where an uncovered cluster would land in the existing taxonomy: the top_n
// leaves closest to the cluster centroid, with their full paths and depths.
GapReport gap_report(const QueryCluster& cluster, const Taxonomy& taxonomy,
                     const EmbeddingStore& leaf_store, size_t top_n);

nlohmann::json gap_report_to_json(const GapReport& report);

}  // namespace taxonav
