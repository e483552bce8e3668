#include "taxonav/batch.hpp"

#include "taxonav/errors.hpp"
#include "taxonav/jsonl.hpp"

namespace taxonav {

std::vector<Query> queries_from_records(const std::vector<nlohmann::json>& records) {
  std::vector<Query> out;
  for (const auto& rec : records) {
    if (rec.contains("meta")) continue;  // provenance line from an earlier run
    if (!rec.contains("query_id") || !rec.at("query_id").is_string() ||
        !rec.contains("query") || !rec.at("query").is_string()) {
      throw ValidationError(ErrorCode::InvalidInput,
                            "query record needs query_id and query strings");
    }
    Query q;
    q.id = rec.at("query_id").get<std::string>();
    q.text = rec.at("query").get<std::string>();
    if (rec.contains("context") && !rec.at("context").is_null()) {
      const auto& ctx = rec.at("context");
      if (!ctx.is_object() || !ctx.contains("kind") || !ctx.at("kind").is_string()) {
        throw ValidationError(ErrorCode::InvalidInput,
                              "query context needs a kind string");
      }
      QueryContext parsed;
      parsed.kind = context_kind_from_name(ctx.at("kind").get<std::string>());
      if (parsed.kind != ContextKind::none) {
        if (!ctx.contains("text") || !ctx.at("text").is_string() ||
            ctx.at("text").get<std::string>().empty()) {
          throw ValidationError(ErrorCode::InvalidInput,
                                "query context needs non-empty text");
        }
        parsed.text = ctx.at("text").get<std::string>();
        q.context = parsed;
      }
    }
    if (q.id.empty() || q.text.empty()) {
      throw ValidationError(ErrorCode::InvalidInput, "query_id and query must be non-empty");
    }
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<Query> queries_from_file(const std::string& path) {
  return queries_from_records(read_jsonl(path));
}

std::vector<SearchResult> run_batch(const std::vector<Query>& queries, const QueryRunner& run,
                                    unsigned workers) {
  return parallel_map<SearchResult>(queries, run, workers);
}

}  // namespace taxonav
