#include "taxonav/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "taxonav/errors.hpp"

namespace taxonav {

UncoveredQuerySet find_uncovered(const std::vector<PredictionSet>& batch,
                                 const ThresholdConfig& config) {
  UncoveredQuerySet out;
  out.config = config;
  for (const auto& ps : batch) {
    if (ps.predictions.empty()) out.query_ids.push_back(ps.query_id);
  }
  return out;
}

std::vector<QueryCluster> cluster_queries(const EmbeddingStore& vectors, double tau,
                                          const std::map<std::string, std::string>& texts) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw ValidationError(ErrorCode::InvalidConfig, "tau must lie strictly between 0 and 1");
  }

  std::vector<std::string> ids = vectors.ids();
  std::sort(ids.begin(), ids.end());
  const size_t n = ids.size();

  // union-find over the similarity graph
  std::vector<size_t> parent(n);
  for (size_t i = 0; i < n; ++i) parent[i] = i;
  std::function<size_t(size_t)> find = [&](size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      if (cosine(vectors.vector(ids[i]), vectors.vector(ids[j])) >= tau) {
        parent[find(i)] = find(j);
      }
    }
  }

  // group members under each component's smallest index so both the order of
  // clusters and the order within a cluster are deterministic
  std::map<size_t, size_t> root_to_min;
  for (size_t i = 0; i < n; ++i) {
    size_t root = find(i);
    if (!root_to_min.count(root)) root_to_min[root] = i;
  }
  std::map<size_t, std::vector<std::string>> groups;
  for (size_t i = 0; i < n; ++i) groups[root_to_min[find(i)]].push_back(ids[i]);

  std::vector<QueryCluster> out;
  for (auto& [min_index, members] : groups) {
    (void)min_index;
    QueryCluster cluster;
    cluster.members = std::move(members);  // already ascending: ids sorted, scan in order

    std::vector<double> sum(vectors.dimension(), 0.0);
    for (const auto& id : cluster.members) {
      const auto& v = vectors.vector(id);
      for (size_t d = 0; d < sum.size(); ++d) sum[d] += v[d];
    }
    double norm = 0;
    for (double x : sum) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0) {
      throw RuntimeError(ErrorCode::ZeroVector,
                         "cluster centroid vanished; members cancel exactly");
    }
    cluster.centroid.resize(sum.size());
    for (size_t d = 0; d < sum.size(); ++d) cluster.centroid[d] = float(sum[d] / norm);

    double best = -2;
    std::string best_id;
    for (const auto& id : cluster.members) {
      double c = cosine(cluster.centroid, vectors.vector(id));
      if (c > best || (c == best && id < best_id)) {
        best = c;
        best_id = id;
      }
    }
    auto text_it = texts.find(best_id);
    cluster.label = text_it == texts.end() ? best_id : text_it->second;
    out.push_back(std::move(cluster));
  }
  return out;
}

GapReport gap_report(const QueryCluster& cluster, const Taxonomy& taxonomy,
                     const EmbeddingStore& leaf_store, size_t top_n) {
  if (top_n < 1) {
    throw ValidationError(ErrorCode::InvalidConfig, "top_n must be at least 1");
  }
  if (leaf_store.size() == 0) {
    throw ValidationError(ErrorCode::EmptyStore, "leaf embedding store is empty");
  }

  GapReport report;
  report.label = cluster.label;
  report.members = cluster.members;
  for (const auto& neighbor : top_k(cluster.centroid, leaf_store, top_n)) {
    CategoryPath path = path_to_root(taxonomy, neighbor.id);
    LeafNeighbor entry;
    entry.leaf_id = neighbor.id;
    entry.path = render_path(path, taxonomy);
    entry.depth = int(path.size()) - 1;
    entry.cosine = neighbor.cosine;
    report.nearest.push_back(std::move(entry));
  }
  return report;
}

nlohmann::json gap_report_to_json(const GapReport& report) {
  nlohmann::json nearest = nlohmann::json::array();
  for (const auto& leaf : report.nearest) {
    nearest.push_back({{"leaf_id", leaf.leaf_id},
                       {"path", leaf.path},
                       {"depth", leaf.depth},
                       {"cosine", leaf.cosine}});
  }
  return nlohmann::json{{"label", report.label},
                        {"size", report.members.size()},
                        {"members", report.members},
                        {"nearest_leaves", nearest}};
}

}  // namespace taxonav
