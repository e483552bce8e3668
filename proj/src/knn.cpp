#include "taxonav/knn.hpp"

#include <algorithm>
#include <cmath>

#include "taxonav/errors.hpp"
#include "taxonav/jsonl.hpp"

namespace taxonav {

void EmbeddingStore::insert(const std::string& id, std::vector<float> vec) {
  if (vec.empty()) throw ValidationError(ErrorCode::InvalidInput, "empty vector for id " + id);
  if (dimension_ == 0) {
    dimension_ = vec.size();
  } else if (vec.size() != dimension_) {
    throw ValidationError(ErrorCode::DimensionMismatch,
                          "vector for " + id + " has dimension " + std::to_string(vec.size()) +
                              ", store uses " + std::to_string(dimension_));
  }
  bool all_zero = std::all_of(vec.begin(), vec.end(), [](float x) { return x == 0.0f; });
  if (all_zero) throw ValidationError(ErrorCode::ZeroVector, "zero vector for id " + id);
  if (vectors_.count(id))
    throw ValidationError(ErrorCode::DuplicateId, "duplicate embedding id: " + id);
  vectors_.emplace(id, std::move(vec));
  order_.push_back(id);
}

const std::vector<float>& EmbeddingStore::vector(const std::string& id) const {
  auto it = vectors_.find(id);
  if (it == vectors_.end())
    throw RuntimeError(ErrorCode::MissingEmbedding, "no embedding for id: " + id);
  return it->second;
}

EmbeddingStore EmbeddingStore::from_file(const std::string& path) {
  EmbeddingStore store;
  for (const auto& rec : read_jsonl(path)) {
    if (!rec.contains("id") || !rec["id"].is_string() || !rec.contains("vector") ||
        !rec["vector"].is_array()) {
      throw ValidationError(ErrorCode::InvalidInput,
                            path + ": embedding records need an id and a vector array");
    }
    std::vector<float> vec;
    vec.reserve(rec["vector"].size());
    for (const auto& x : rec["vector"]) {
      if (!x.is_number())
        throw ValidationError(ErrorCode::InvalidInput, path + ": non-numeric vector component");
      vec.push_back(x.get<float>());
    }
    store.insert(rec["id"].get<std::string>(), std::move(vec));
  }
  return store;
}

double cosine(const std::vector<float>& u, const std::vector<float>& v) {
  if (u.size() != v.size()) {
    throw ValidationError(ErrorCode::DimensionMismatch,
                          "cosine of vectors with dimensions " + std::to_string(u.size()) +
                              " and " + std::to_string(v.size()));
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    dot += double(u[i]) * v[i];
    nu += double(u[i]) * u[i];
    nv += double(v[i]) * v[i];
  }
  if (nu == 0.0 || nv == 0.0)
    throw ValidationError(ErrorCode::ZeroVector, "cosine with a zero vector");
  double c = dot / (std::sqrt(nu) * std::sqrt(nv));
  return std::max(-1.0, std::min(1.0, c));
}

std::vector<Neighbor> top_k(const std::vector<float>& query_vec, const EmbeddingStore& store,
                            size_t k) {
  std::vector<Neighbor> all;
  all.reserve(store.size());
  for (const auto& id : store.ids()) {
    all.push_back({id, cosine(query_vec, store.vector(id))});
  }
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.cosine != b.cosine) return a.cosine > b.cosine;
    return a.id < b.id;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

PredictionSet baseline_categorize(const std::vector<float>& query_vec,
                                  const EmbeddingStore& leaf_store, size_t k, int max_score) {
  if (leaf_store.size() == 0) throw ValidationError(ErrorCode::EmptyStore, "empty leaf store");
  PredictionSet out;
  for (const auto& n : top_k(query_vec, leaf_store, k)) {
    out.predictions.push_back({n.id, cosine_to_score(n.cosine, max_score)});
  }
  sort_predictions(out.predictions);
  return out;
}

SemanticScore EmbeddingScorer::score(const ScoreRequest& req) {
  double c = cosine(queries_.vector(req.query_id), nodes_.vector(req.node_id));
  return {cosine_to_score(c, req.max_score), std::nullopt};
}

}  // namespace taxonav
