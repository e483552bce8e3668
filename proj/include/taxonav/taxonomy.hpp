#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace taxonav {

struct CategoryNode {
  std::string id;
  std::optional<std::string> parent_id;  // absent only for the root
  std::string name;
  std::optional<std::string> description;
};

// Ordered node ids from the root down to a target node.
using CategoryPath = std::vector<std::string>;

// Immutable rooted category tree. Child order follows the input file, so
// traversals are reproducible across runs.
class Taxonomy {
 public:
  const std::string& root_id() const { return root_id_; }
  size_t size() const { return order_.size(); }

  bool contains(const std::string& id) const { return index_.count(id) > 0; }
  // Throws ValidationError(UnknownNode) for ids not in the tree.
  const CategoryNode& node(const std::string& id) const;
  const std::vector<std::string>& children(const std::string& id) const;
  bool is_leaf(const std::string& id) const { return children(id).empty(); }

  // Node ids in input order.
  const std::vector<std::string>& ids() const { return order_; }
  // Leaf ids in input order.
  std::vector<std::string> leaves() const;

 private:
  friend Taxonomy load_taxonomy(const std::vector<nlohmann::json>& records);

  std::vector<std::string> order_;
  std::unordered_map<std::string, CategoryNode> nodes_;
  std::unordered_map<std::string, std::vector<std::string>> children_;
  std::unordered_map<std::string, size_t> index_;
  std::string root_id_;
};

// Builds and validates a taxonomy from parsed JSONL records
// {"id", "parent_id", "name", "description"}. Throws ValidationError with
// DuplicateId, MultipleRoots, NoRoot, DanglingParent or CycleDetected; every
// message names the offending ids.
Taxonomy load_taxonomy(const std::vector<nlohmann::json>& records);
Taxonomy load_taxonomy_file(const std::string& path);

CategoryPath path_to_root(const Taxonomy& t, const std::string& id);

// Joins node names with " > ", e.g.
// "AllCats > Musical Instruments & Gear > Guitars & Basses".
std::string render_path(const CategoryPath& p, const Taxonomy& t);

// One JSONL line per node, input order preserved. load(serialize(t)) == t.
std::string serialize_taxonomy(const Taxonomy& t);

}  // namespace taxonav
