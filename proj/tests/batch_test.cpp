#include "taxonav/batch.hpp"

#include <doctest.h>

#include <atomic>
#include <chrono>
#include <string>
#include <thread>
#include <vector>

#include "taxonav/errors.hpp"
#include "taxonav/search.hpp"
#include "support/test_scorers.hpp"

using namespace taxonav;

namespace {

std::vector<nlohmann::json> parse_lines(const std::vector<std::string>& lines) {
  std::vector<nlohmann::json> out;
  for (const auto& l : lines) out.push_back(nlohmann::json::parse(l));
  return out;
}

}  // namespace

TEST_CASE("query records parse ids, text and optional context") {
  auto queries = queries_from_records(parse_lines({
      R"({"query_id": "q1", "query": "gibson les paul"})",
      R"({"query_id": "q2", "query": "flash", "context": {"kind": "intent", "text": "seeking accessories"}})",
      R"({"query_id": "q3", "query": "mug", "context": {"kind": "free_text", "text": "gift for a coffee drinker"}})",
      R"({"query_id": "q4", "query": "bmw wheel", "context": {"kind": "brand_origin", "text": "brand origin is from Germany"}})",
  }));
  REQUIRE(queries.size() == 4);
  CHECK(queries[0].id == "q1");
  CHECK(queries[0].text == "gibson les paul");
  CHECK(queries[0].context.kind == ContextKind::none);
  CHECK(queries[1].context.kind == ContextKind::intent);
  CHECK(queries[1].context.text == "seeking accessories");
  CHECK(queries[2].context.kind == ContextKind::free_text);
  CHECK(queries[3].context.kind == ContextKind::brand_origin);
}

TEST_CASE("query records reject structural problems") {
  CHECK_THROWS_AS(queries_from_records(parse_lines({R"({"query": "no id"})"})), ValidationError);
  CHECK_THROWS_AS(queries_from_records(parse_lines({R"({"query_id": "q"})"})), ValidationError);
  CHECK_THROWS_AS(queries_from_records(parse_lines({R"({"query_id": "", "query": "x"})"})),
                  ValidationError);
  CHECK_THROWS_AS(queries_from_records(parse_lines({R"({"query_id": "q", "query": ""})"})),
                  ValidationError);
  CHECK_THROWS_AS(
      queries_from_records(parse_lines({R"({"query_id": "q", "query": "x", "context": "flat"})"})),
      ValidationError);
  CHECK_THROWS_AS(queries_from_records(parse_lines(
                      {R"({"query_id": "q", "query": "x", "context": {"kind": "psychic"}})"})),
                  ValidationError);
  CHECK_THROWS_AS(queries_from_records(parse_lines(
                      {R"({"query_id": "q", "query": "x", "context": {"kind": "intent"}})"})),
                  ValidationError);
}

TEST_CASE("query records skip the meta line") {
  auto queries = queries_from_records(parse_lines({
      R"({"meta": {"command": "batch"}})",
      R"({"query_id": "q1", "query": "banjo"})",
  }));
  REQUIRE(queries.size() == 1);
  CHECK(queries[0].id == "q1");
}

TEST_CASE("parallel_map keeps input order at any worker count") {
  std::vector<Query> queries;
  for (int i = 0; i < 200; ++i) {
    queries.push_back({"q" + std::to_string(i), "text " + std::to_string(i), {}});
  }
  auto work = [](const Query& q) {
    // stagger a little so threads genuinely interleave
    if (q.id.size() % 3 == 0) std::this_thread::sleep_for(std::chrono::microseconds(50));
    return q.id + "/" + q.text;
  };
  std::vector<std::string> expected = parallel_map<std::string>(queries, work, 1);
  for (unsigned workers : {0u, 2u, 5u, 16u}) {
    CAPTURE(workers);
    CHECK(parallel_map<std::string>(queries, work, workers) == expected);
  }
}

TEST_CASE("parallel_map surfaces the smallest failing index at any worker count") {
  std::vector<Query> queries;
  for (int i = 0; i < 64; ++i) {
    queries.push_back({"q" + std::to_string(i), "t", {}});
  }
  auto work = [](const Query& q) -> int {
    if (q.id == "q41") throw RuntimeError(ErrorCode::TransportError, "boom at 41");
    if (q.id == "q7") throw RuntimeError(ErrorCode::TransportError, "boom at 7");
    return 1;
  };
  for (unsigned workers : {1u, 2u, 8u}) {
    CAPTURE(workers);
    try {
      parallel_map<int>(queries, work, workers);
      FAIL("expected a RuntimeError");
    } catch (const RuntimeError& e) {
      CHECK(std::string(e.what()).find("boom at 7") != std::string::npos);
    }
  }
}

TEST_CASE("parallel_map runs every element even when one fails early") {
  std::vector<Query> queries;
  for (int i = 0; i < 32; ++i) queries.push_back({"q" + std::to_string(i), "t", {}});
  std::atomic<int> ran{0};
  auto work = [&ran](const Query& q) -> int {
    ran.fetch_add(1);
    if (q.id == "q0") throw RuntimeError(ErrorCode::TransportError, "first");
    return 0;
  };
  CHECK_THROWS_AS(parallel_map<int>(queries, work, 4), RuntimeError);
  CHECK(ran.load() == 32);
}

TEST_CASE("run_batch categorizes queries independently and in order") {
  Taxonomy t = load_taxonomy(parse_lines({
      R"({"id": "root", "name": "All"})",
      R"({"id": "a", "parent_id": "root", "name": "A"})",
      R"({"id": "b", "parent_id": "root", "name": "B"})",
  }));
  MockScorer scorer = MockScorer::from_json(nlohmann::json{
      {"default", 1},
      {"entries", nlohmann::json::array({
                      {{"query", "one"}, {"node_id", "a"}, {"score", 10}},
                      {{"query", "one"}, {"node_id", "b"}, {"score", 2}},
                      {{"query", "two"}, {"node_id", "a"}, {"score", 3}},
                      {{"query", "two"}, {"node_id", "b"}, {"score", 9}},
                  })}});
  ThresholdConfig config{9, 8, 10};
  std::vector<Query> queries{{"1", "one", {}}, {"2", "two", {}}, {"3", "one", {}}};

  auto runner = [&](const Query& q) { return cot_bfs(q, t, scorer, config); };
  std::vector<SearchResult> results = run_batch(queries, runner, 3);

  REQUIRE(results.size() == 3);
  CHECK(results[0].predictions.query_id == "1");
  REQUIRE(results[0].predictions.predictions.size() == 1);
  CHECK(results[0].predictions.predictions[0].leaf_id == "a");
  REQUIRE(results[1].predictions.predictions.size() == 1);
  CHECK(results[1].predictions.predictions[0].leaf_id == "b");
  CHECK(results[2].predictions.predictions == results[0].predictions.predictions);

  SearchResult alone = cot_bfs(queries[1], t, scorer, config);
  CHECK(trace_to_json(results[1].trace) == trace_to_json(alone.trace));
}
