#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "taxonav/predictions.hpp"
#include "taxonav/scoring.hpp"

namespace taxonav {

// In-memory id -> vector map. All vectors share one dimension, fixed by the
// first record; zero vectors are rejected at load.
class EmbeddingStore {
 public:
  void insert(const std::string& id, std::vector<float> vec);

  size_t dimension() const { return dimension_; }
  size_t size() const { return order_.size(); }
  bool contains(const std::string& id) const { return vectors_.count(id) > 0; }
  // Throws RuntimeError(MissingEmbedding) for unknown ids.
  const std::vector<float>& vector(const std::string& id) const;
  // Ids in insertion order.
  const std::vector<std::string>& ids() const { return order_; }

  // JSONL records {"id": string, "vector": [number, ...]}.
  static EmbeddingStore from_file(const std::string& path);

 private:
  size_t dimension_ = 0;
  std::unordered_map<std::string, std::vector<float>> vectors_;
  std::vector<std::string> order_;
};

struct Neighbor {
  std::string id;
  double cosine = 0.0;
};

// dot(u,v) / (|u| |v|), clamped to [-1, 1]. Throws DimensionMismatch or
// ZeroVector.
double cosine(const std::vector<float>& u, const std::vector<float>& v);

// Exhaustive exact scan: min(k, store size) neighbors sorted by cosine
// descending, id ascending on ties.
std::vector<Neighbor> top_k(const std::vector<float>& query_vec, const EmbeddingStore& store,
                            size_t k);

// Embedding-only categorizer: the k nearest leaves, with each prediction's
// score slot carrying the cosine mapped onto the 1..max_score scale.
PredictionSet baseline_categorize(const std::vector<float>& query_vec,
                                  const EmbeddingStore& leaf_store, size_t k = 10,
                                  int max_score = 10);

// Scores a request as the mapped cosine between the query embedding (looked
// up by query_id) and the node embedding (looked up by node_id).
class EmbeddingScorer : public SemanticScorer {
 public:
  EmbeddingScorer(const EmbeddingStore& query_store, const EmbeddingStore& node_store)
      : queries_(query_store), nodes_(node_store) {}

  SemanticScore score(const ScoreRequest& req) override;

 private:
  const EmbeddingStore& queries_;
  const EmbeddingStore& nodes_;
};

}  // namespace taxonav
