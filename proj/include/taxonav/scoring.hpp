#pragma once

#include <atomic>
#include <cstdint>
#include <json.hpp>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

namespace taxonav {

enum class ContextKind { none, intent, brand_origin, free_text };

const char* context_kind_name(ContextKind kind);
ContextKind context_kind_from_name(const std::string& name);

// Optional query-side conditioning, e.g. buyer intent ("seeking accessories")
// or brand origin ("brand origin is from Germany").
struct QueryContext {
  ContextKind kind = ContextKind::none;
  std::string text;
};

// "" for no context, otherwise "<kind>:<text>". Used for mock-table and cache
// keys.
std::string context_key(const QueryContext& ctx);

// Tree-phase requests rate a child during the search; leaf-phase requests
// re-rate a surviving leaf using only its full root-to-leaf path and
// description.
enum class ScorePhase { tree, leaf };

struct ScoreRequest {
  std::string query_id;  // identity for embedding lookup; defaults to the query text
  std::string query;
  std::string path_text;  // rendered root-to-node path
  std::string parent_name;
  std::string node_name;
  std::string node_id;
  std::optional<std::string> description;
  QueryContext context;
  int max_score = 10;
  ScorePhase phase = ScorePhase::tree;
};

struct SemanticScore {
  int value = 0;
  std::optional<std::string> raw_response;
};

class SemanticScorer {
 public:
  virtual ~SemanticScorer() = default;
  // Returns a value in [1, req.max_score]. Implementations must be safe to
  // call from multiple threads.
  virtual SemanticScore score(const ScoreRequest& req) = 0;
};

// FNV-1a 64-bit, used for template versioning and cache keys.
uint64_t fnv1a64(std::string_view data, uint64_t seed = 14695981039346656037ull);
std::string fnv1a64_hex(std::string_view data);

// Default prompt templates. Placeholders: {query} {path} {parent} {node}
// {description} {context} {max_score}.
const std::string& default_tree_template();
const std::string& default_leaf_template();

// Fingerprint of a template's text; distinguishes cache entries produced by
// different prompts.
std::string template_version(const std::string& template_text);

// Substitutes placeholders into the template. Lines mentioning {description}
// or {context} are dropped wholesale when the request has no description or
// no context. Throws ValidationError(UnknownPlaceholder) on any {identifier}
// outside the supported set.
std::string build_prompt(const ScoreRequest& req, const std::string& template_text);

// Extracts the first run of digits whose value lies in [1, max_score],
// scanning left to right. Throws RuntimeError(NoScoreFound) when none exists.
int parse_score(const std::string& response, int max_score);

// Maps a cosine similarity in [-1, 1] onto the integer score scale:
// clamp(round_half_up(1 + ((cos+1)/2) * (R-1)), 1, R).
int cosine_to_score(double cosine, int max_score);

// Stable cache identity: hash over template version, query text, node id,
// context kind and text, and the score range.
std::string cache_key(const std::string& template_version, const ScoreRequest& req);

// Table-driven deterministic scorer for tests and offline runs. Lookup order:
// exact (query, node_id, context, phase), then phase-agnostic, then default.
class MockScorer : public SemanticScorer {
 public:
  explicit MockScorer(int default_score = 1) : default_(default_score) {}
  MockScorer(MockScorer&& other) noexcept
      : by_phase_(std::move(other.by_phase_)),
        any_phase_(std::move(other.any_phase_)),
        default_(other.default_),
        tree_calls_(other.tree_calls_.load()),
        leaf_calls_(other.leaf_calls_.load()) {}

  void add(const std::string& query, const std::string& node_id, const std::string& context,
           int score);
  void add(const std::string& query, const std::string& node_id, const std::string& context,
           ScorePhase phase, int score);

  SemanticScore score(const ScoreRequest& req) override;

  // {"default": int, "entries": [{"query", "node_id", "context"?, "phase"?,
  // "score"}]}; "phase" is "tree" or "leaf" when present.
  static MockScorer from_json(const nlohmann::json& doc);
  static MockScorer from_file(const std::string& path);

  int tree_calls() const { return tree_calls_.load(); }
  int leaf_calls() const { return leaf_calls_.load(); }

 private:
  std::unordered_map<std::string, int> by_phase_;
  std::unordered_map<std::string, int> any_phase_;
  int default_;
  std::atomic<int> tree_calls_{0};
  std::atomic<int> leaf_calls_{0};
};

// Thread-safe append-only score cache persisted as JSONL {"key", "score"}.
// Corrupt lines in an existing file are skipped with a warning on stderr.
class ScoreCache {
 public:
  explicit ScoreCache(const std::string& path);

  std::optional<int> get(const std::string& key) const;
  void put(const std::string& key, int score);
  size_t size() const;

 private:
  mutable std::mutex mu_;
  std::unordered_map<std::string, int> entries_;
  std::string path_;
};

}  // namespace taxonav
