#include "taxonav/taxonomy.hpp"

#include <algorithm>
#include <deque>
#include <sstream>
#include <unordered_set>

#include "taxonav/errors.hpp"
#include "taxonav/jsonl.hpp"

namespace taxonav {

namespace {

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  return out;
}

std::optional<std::string> optional_string(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw ValidationError(ErrorCode::InvalidInput,
                          std::string("field '") + key + "' must be a string or null");
  }
  return it->get<std::string>();
}

}  // namespace

const CategoryNode& Taxonomy::node(const std::string& id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw ValidationError(ErrorCode::UnknownNode, "no such node: " + id);
  return it->second;
}

const std::vector<std::string>& Taxonomy::children(const std::string& id) const {
  auto it = children_.find(id);
  if (it == children_.end()) throw ValidationError(ErrorCode::UnknownNode, "no such node: " + id);
  return it->second;
}

std::vector<std::string> Taxonomy::leaves() const {
  std::vector<std::string> out;
  for (const auto& id : order_) {
    if (children_.at(id).empty()) out.push_back(id);
  }
  return out;
}

Taxonomy load_taxonomy(const std::vector<nlohmann::json>& records) {
  Taxonomy t;
  for (const auto& rec : records) {
    CategoryNode node;
    auto id = optional_string(rec, "id");
    auto name = optional_string(rec, "name");
    if (!id || id->empty())
      throw ValidationError(ErrorCode::InvalidInput, "node record without an id");
    if (!name || name->empty())
      throw ValidationError(ErrorCode::InvalidInput, "node " + *id + ": empty name");
    node.id = *id;
    node.name = *name;
    node.parent_id = optional_string(rec, "parent_id");
    node.description = optional_string(rec, "description");

    if (t.nodes_.count(node.id))
      throw ValidationError(ErrorCode::DuplicateId, "duplicate node id: " + node.id);
    t.index_[node.id] = t.order_.size();
    t.order_.push_back(node.id);
    t.children_[node.id];
    t.nodes_.emplace(node.id, std::move(node));
  }

  std::vector<std::string> roots;
  for (const auto& id : t.order_) {
    const CategoryNode& n = t.nodes_.at(id);
    if (!n.parent_id) {
      roots.push_back(id);
      continue;
    }
    auto parent = t.nodes_.find(*n.parent_id);
    if (parent == t.nodes_.end()) {
      throw ValidationError(ErrorCode::DanglingParent,
                            "node " + id + " references missing parent " + *n.parent_id);
    }
    t.children_.at(*n.parent_id).push_back(id);
  }
  if (roots.empty()) throw ValidationError(ErrorCode::NoRoot, "no root node (every node has a parent)");
  if (roots.size() > 1)
    throw ValidationError(ErrorCode::MultipleRoots, "multiple roots: " + join_ids(roots));
  t.root_id_ = roots.front();

  // Every node carries at most one parent link, so any node unreachable from
  // the root must sit on or below a parent cycle.
  std::unordered_set<std::string> seen;
  std::deque<std::string> frontier{t.root_id_};
  seen.insert(t.root_id_);
  while (!frontier.empty()) {
    std::string id = frontier.front();
    frontier.pop_front();
    for (const auto& child : t.children_.at(id)) {
      if (seen.insert(child).second) frontier.push_back(child);
    }
  }
  if (seen.size() != t.order_.size()) {
    std::vector<std::string> stranded;
    for (const auto& id : t.order_) {
      if (!seen.count(id)) stranded.push_back(id);
    }
    throw ValidationError(ErrorCode::CycleDetected,
                          "parent links form a cycle involving: " + join_ids(stranded));
  }
  return t;
}

Taxonomy load_taxonomy_file(const std::string& path) { return load_taxonomy(read_jsonl(path)); }

CategoryPath path_to_root(const Taxonomy& t, const std::string& id) {
  CategoryPath path;
  const CategoryNode* cur = &t.node(id);
  path.push_back(cur->id);
  while (cur->parent_id) {
    cur = &t.node(*cur->parent_id);
    path.push_back(cur->id);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::string render_path(const CategoryPath& p, const Taxonomy& t) {
  std::string out;
  for (size_t i = 0; i < p.size(); ++i) {
    if (i) out += " > ";
    out += t.node(p[i]).name;
  }
  return out;
}

std::string serialize_taxonomy(const Taxonomy& t) {
  std::ostringstream out;
  for (const auto& id : t.ids()) {
    const CategoryNode& n = t.node(id);
    nlohmann::json obj;
    obj["id"] = n.id;
    obj["parent_id"] = n.parent_id ? nlohmann::json(*n.parent_id) : nlohmann::json(nullptr);
    obj["name"] = n.name;
    obj["description"] = n.description ? nlohmann::json(*n.description) : nlohmann::json(nullptr);
    out << obj.dump() << "\n";
  }
  return out.str();
}

}  // namespace taxonav
