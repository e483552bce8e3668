#include "taxonav/scoring.hpp"

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "taxonav/errors.hpp"

namespace taxonav {

const char* context_kind_name(ContextKind kind) {
  switch (kind) {
    case ContextKind::none: return "none";
    case ContextKind::intent: return "intent";
    case ContextKind::brand_origin: return "brand_origin";
    case ContextKind::free_text: return "free_text";
  }
  return "none";
}

ContextKind context_kind_from_name(const std::string& name) {
  if (name == "none") return ContextKind::none;
  if (name == "intent") return ContextKind::intent;
  if (name == "brand_origin") return ContextKind::brand_origin;
  if (name == "free_text") return ContextKind::free_text;
  throw ValidationError(ErrorCode::InvalidConfig, "unknown context kind: " + name);
}

std::string context_key(const QueryContext& ctx) {
  if (ctx.kind == ContextKind::none) return "";
  return std::string(context_kind_name(ctx.kind)) + ":" + ctx.text;
}

uint64_t fnv1a64(std::string_view data, uint64_t seed) {
  uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string fnv1a64_hex(std::string_view data) {
  uint64_t h = fnv1a64(data);
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

const std::string& default_tree_template() {
  static const std::string tmpl =
      "You rate the semantic relevance of an e-commerce category to a user query.\n"
      "Query: {query}\n"
      "Category path: {path}\n"
      "Parent category: {parent}\n"
      "Candidate category: {node}\n"
      "Category description: {description}\n"
      "Search context: {context}\n"
      "On a scale from 1 (lowest) to {max_score} (highest), how semantically relevant is the "
      "candidate category to the query?\n"
      "Answer with a single integer between 1 and {max_score}.\n";
  return tmpl;
}

const std::string& default_leaf_template() {
  static const std::string tmpl =
      "You rate the semantic relevance of an e-commerce leaf category to a user query.\n"
      "Query: {query}\n"
      "Leaf category path: {path}\n"
      "Category description: {description}\n"
      "Search context: {context}\n"
      "On a scale from 1 (lowest) to {max_score} (highest), how semantically relevant is the "
      "leaf category to the query?\n"
      "Answer with a single integer between 1 and {max_score}.\n";
  return tmpl;
}

std::string template_version(const std::string& template_text) {
  return fnv1a64_hex(template_text);
}

namespace {

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::string context_phrase(const QueryContext& ctx) {
  switch (ctx.kind) {
    case ContextKind::intent: return "buyer intent: " + ctx.text;
    case ContextKind::brand_origin: return "brand origin: " + ctx.text;
    case ContextKind::free_text: return ctx.text;
    case ContextKind::none: return "";
  }
  return "";
}

// Substitutes {identifier} placeholders in a single line.
std::string substitute_line(const std::string& line, const ScoreRequest& req) {
  std::string out;
  size_t i = 0;
  while (i < line.size()) {
    if (line[i] != '{') {
      out += line[i++];
      continue;
    }
    size_t j = i + 1;
    while (j < line.size() && is_ident_char(line[j])) ++j;
    if (j >= line.size() || line[j] != '}' || j == i + 1) {
      out += line[i++];  // not a placeholder, keep the brace verbatim
      continue;
    }
    std::string name = line.substr(i + 1, j - i - 1);
    if (name == "query") out += req.query;
    else if (name == "path") out += req.path_text;
    else if (name == "parent") out += req.parent_name;
    else if (name == "node") out += req.node_name;
    else if (name == "description") out += req.description.value_or("");
    else if (name == "context") out += context_phrase(req.context);
    else if (name == "max_score") out += std::to_string(req.max_score);
    else
      throw ValidationError(ErrorCode::UnknownPlaceholder,
                            "template references unknown placeholder {" + name + "}");
    i = j + 1;
  }
  return out;
}

}  // namespace

std::string build_prompt(const ScoreRequest& req, const std::string& template_text) {
  std::string out;
  size_t start = 0;
  while (start <= template_text.size()) {
    size_t end = template_text.find('\n', start);
    bool had_newline = end != std::string::npos;
    std::string line = template_text.substr(start, had_newline ? end - start : std::string::npos);

    bool drop = (!req.description && line.find("{description}") != std::string::npos) ||
                (req.context.kind == ContextKind::none &&
                 line.find("{context}") != std::string::npos);
    if (!drop) {
      out += substitute_line(line, req);
      if (had_newline) out += '\n';
    }
    if (!had_newline) break;
    start = end + 1;
  }
  return out;
}

int parse_score(const std::string& response, int max_score) {
  size_t i = 0;
  while (i < response.size()) {
    if (!std::isdigit(static_cast<unsigned char>(response[i]))) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j < response.size() && std::isdigit(static_cast<unsigned char>(response[j]))) ++j;
    if (j - i <= 9) {
      long value = std::stol(response.substr(i, j - i));
      if (value >= 1 && value <= max_score) return static_cast<int>(value);
    }
    i = j;
  }
  throw RuntimeError(ErrorCode::NoScoreFound,
                     "no integer in [1," + std::to_string(max_score) + "] in: " + response);
}

int cosine_to_score(double cosine, int max_score) {
  double x = 1.0 + ((cosine + 1.0) / 2.0) * (max_score - 1);
  int v = static_cast<int>(std::floor(x + 0.5));
  return std::max(1, std::min(max_score, v));
}

std::string cache_key(const std::string& template_version, const ScoreRequest& req) {
  constexpr char sep = '\x1f';
  std::string material = template_version;
  material += sep;
  material += req.query;
  material += sep;
  material += req.node_id;
  material += sep;
  material += context_kind_name(req.context.kind);
  material += sep;
  material += req.context.text;
  material += sep;
  material += std::to_string(req.max_score);
  return fnv1a64_hex(material);
}

namespace {

std::string mock_key(const std::string& query, const std::string& node_id,
                     const std::string& context) {
  constexpr char sep = '\x1f';
  return query + sep + node_id + sep + context;
}

}  // namespace

void MockScorer::add(const std::string& query, const std::string& node_id,
                     const std::string& context, int score) {
  any_phase_[mock_key(query, node_id, context)] = score;
}

void MockScorer::add(const std::string& query, const std::string& node_id,
                     const std::string& context, ScorePhase phase, int score) {
  std::string key = mock_key(query, node_id, context);
  key += '\x1f';
  key += (phase == ScorePhase::tree ? "tree" : "leaf");
  by_phase_[key] = score;
}

SemanticScore MockScorer::score(const ScoreRequest& req) {
  (req.phase == ScorePhase::tree ? tree_calls_ : leaf_calls_).fetch_add(1);

  std::string key = mock_key(req.query, req.node_id, context_key(req.context));
  int value = default_;
  std::string phased = key;
  phased += '\x1f';
  phased += (req.phase == ScorePhase::tree ? "tree" : "leaf");
  if (auto it = by_phase_.find(phased); it != by_phase_.end()) {
    value = it->second;
  } else if (auto it2 = any_phase_.find(key); it2 != any_phase_.end()) {
    value = it2->second;
  }
  if (value < 1 || value > req.max_score) {
    throw ValidationError(ErrorCode::InvalidConfig,
                          "mock score " + std::to_string(value) + " outside [1," +
                              std::to_string(req.max_score) + "] for node " + req.node_id);
  }
  return {value, std::nullopt};
}

MockScorer MockScorer::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ValidationError(ErrorCode::InvalidInput, "mock table must be a JSON object");
  int default_score = doc.value("default", 1);
  MockScorer scorer(default_score);
  if (doc.contains("entries")) {
    if (!doc["entries"].is_array())
      throw ValidationError(ErrorCode::InvalidInput, "mock table entries must be an array");
    for (const auto& e : doc["entries"]) {
      if (!e.contains("query") || !e.contains("node_id") || !e.contains("score")) {
        throw ValidationError(ErrorCode::InvalidInput,
                              "mock entry needs query, node_id and score fields");
      }
      std::string query = e["query"].get<std::string>();
      std::string node_id = e["node_id"].get<std::string>();
      std::string context = e.value("context", std::string());
      int score = e["score"].get<int>();
      if (e.contains("phase")) {
        std::string phase = e["phase"].get<std::string>();
        if (phase != "tree" && phase != "leaf")
          throw ValidationError(ErrorCode::InvalidInput, "mock entry phase must be tree or leaf");
        scorer.add(query, node_id, context, phase == "tree" ? ScorePhase::tree : ScorePhase::leaf,
                   score);
      } else {
        scorer.add(query, node_id, context, score);
      }
    }
  }
  return scorer;
}

MockScorer MockScorer::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError(ErrorCode::IoError, "cannot open mock table: " + path);
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded())
    throw ValidationError(ErrorCode::InvalidInput, "mock table is not valid JSON: " + path);
  return from_json(doc);
}

ScoreCache::ScoreCache(const std::string& path) : path_(path) {
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object() || !obj.contains("key") || !obj.contains("score") ||
        !obj["key"].is_string() || !obj["score"].is_number_integer()) {
      std::cerr << "warning: skipping corrupt cache line " << path_ << ":" << lineno << "\n";
      continue;
    }
    entries_[obj["key"].get<std::string>()] = obj["score"].get<int>();
  }
}

std::optional<int> ScoreCache::get(const std::string& key) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ScoreCache::put(const std::string& key, int score) {
  std::lock_guard<std::mutex> lock(mu_);
  auto [it, inserted] = entries_.emplace(key, score);
  if (!inserted) return;
  std::ofstream out(path_, std::ios::app);
  if (!out) throw RuntimeError(ErrorCode::IoError, "cannot append to cache: " + path_);
  nlohmann::json obj{{"key", key}, {"score", score}};
  out << obj.dump() << "\n";
  out.flush();
}

size_t ScoreCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return entries_.size();
}

}  // namespace taxonav
