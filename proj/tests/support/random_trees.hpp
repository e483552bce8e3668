#pragma once

#include <json.hpp>
#include <random>
#include <string>
#include <vector>

#include "taxonav/knn.hpp"
#include "taxonav/taxonomy.hpp"

namespace taxonav::testing {

// Random rooted tree: every internal node gets 1..max_fanout children, with a
// coin deciding whether a node below the root becomes internal, until
// max_depth. Ids are "n<counter>" in creation (input) order.
inline Taxonomy random_taxonomy(std::mt19937& rng, int max_depth = 4, int max_fanout = 6) {
  std::vector<nlohmann::json> records;
  int counter = 0;
  auto fresh = [&](const nlohmann::json& parent) {
    std::string id = "n" + std::to_string(counter++);
    records.push_back(
        {{"id", id}, {"parent_id", parent}, {"name", "Node " + id}, {"description", nullptr}});
    return id;
  };

  struct Item {
    std::string id;
    int depth;
  };
  std::vector<Item> stack{{fresh(nullptr), 0}};
  while (!stack.empty()) {
    Item item = stack.back();
    stack.pop_back();
    if (item.depth >= max_depth) continue;
    bool expand = item.depth == 0 || (rng() % 100) < 65;
    if (!expand) continue;
    int fanout = 1 + int(rng() % max_fanout);
    for (int i = 0; i < fanout; ++i) {
      stack.push_back({fresh(item.id), item.depth + 1});
    }
  }
  return load_taxonomy(records);
}

// Unit-ish random embeddings for every node of a taxonomy.
inline EmbeddingStore random_node_embeddings(std::mt19937& rng, const Taxonomy& t,
                                             size_t dim = 8) {
  EmbeddingStore store;
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  for (const auto& id : t.ids()) {
    std::vector<float> v(dim);
    bool nonzero = false;
    for (auto& x : v) {
      x = dist(rng);
      nonzero |= x != 0.0f;
    }
    if (!nonzero) v[0] = 1.0f;
    store.insert(id, std::move(v));
  }
  return store;
}

}  // namespace taxonav::testing
