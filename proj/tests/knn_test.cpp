#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "taxonav/errors.hpp"
#include "taxonav/knn.hpp"

using namespace taxonav;

namespace {

std::vector<float> vec(std::initializer_list<float> xs) { return std::vector<float>(xs); }

// Brute-force reference: compute every cosine with long doubles and sort.
std::vector<Neighbor> top_k_reference(const std::vector<float>& q, const EmbeddingStore& store,
                                      size_t k) {
  std::vector<Neighbor> all;
  for (const auto& id : store.ids()) {
    const auto& v = store.vector(id);
    long double dot = 0, nq = 0, nv = 0;
    for (size_t i = 0; i < v.size(); ++i) {
      dot += (long double)q[i] * v[i];
      nq += (long double)q[i] * q[i];
      nv += (long double)v[i] * v[i];
    }
    all.push_back({id, double(dot / (std::sqrt(nq) * std::sqrt(nv)))});
  }
  std::stable_sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.cosine != b.cosine) return a.cosine > b.cosine;
    return a.id < b.id;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

EmbeddingStore random_store(std::mt19937& rng, size_t n, size_t dim) {
  EmbeddingStore store;
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  for (size_t i = 0; i < n; ++i) {
    std::vector<float> v(dim);
    bool nonzero = false;
    for (auto& x : v) {
      x = dist(rng);
      nonzero |= x != 0.0f;
    }
    if (!nonzero) v[0] = 1.0f;
    char id[16];
    std::snprintf(id, sizeof(id), "v%04zu", i);
    store.insert(id, std::move(v));
  }
  return store;
}

}  // namespace

TEST_CASE("cosine basics") {
  CHECK(cosine(vec({2, 0}), vec({2, 0})) == doctest::Approx(1.0));
  CHECK(cosine(vec({1, 0}), vec({0, 3})) == doctest::Approx(0.0));
  CHECK(cosine(vec({1, 0}), vec({1, 1})) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(cosine(vec({1, 2}), vec({-1, -2})) == doctest::Approx(-1.0));
}

TEST_CASE("cosine rejects mismatched and zero vectors") {
  CHECK_THROWS_AS(cosine(vec({1, 0}), vec({1, 0, 0})), ValidationError);
  CHECK_THROWS_AS(cosine(vec({0, 0}), vec({1, 0})), ValidationError);
  try {
    cosine(vec({0, 0}), vec({1, 0}));
  } catch (const ValidationError& e) {
    CHECK(e.code() == ErrorCode::ZeroVector);
  }
}

TEST_CASE("cosine is symmetric and scale invariant") {
  std::mt19937 rng(404);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<float> u(8), v(8), u2(8);
    for (int i = 0; i < 8; ++i) {
      u[i] = dist(rng);
      v[i] = dist(rng);
    }
    u[0] += 0.1f;
    v[0] += 0.1f;
    for (int i = 0; i < 8; ++i) u2[i] = u[i] * 4.0f;  // power of two: exact scaling
    CHECK(cosine(u, v) == doctest::Approx(cosine(v, u)).epsilon(1e-12));
    CHECK(std::abs(cosine(u, v) - cosine(u2, v)) < 1e-12);
  }
}

TEST_CASE("store enforces one dimension and no zero vectors") {
  EmbeddingStore store;
  store.insert("a", vec({1, 2, 3}));
  CHECK(store.dimension() == 3);
  CHECK_THROWS_AS(store.insert("b", vec({1, 2})), ValidationError);
  CHECK_THROWS_AS(store.insert("c", vec({0, 0, 0})), ValidationError);
  CHECK_THROWS_AS(store.insert("a", vec({4, 5, 6})), ValidationError);
  CHECK_THROWS_AS(store.vector("missing"), RuntimeError);
}

TEST_CASE("store loads JSONL and keeps insertion order") {
  namespace fs = std::filesystem;
  fs::path file = fs::temp_directory_path() / "taxonav_store_test.jsonl";
  std::ofstream(file) << R"({"id": "x", "vector": [1, 0]})" << "\n"
                      << R"({"id": "y", "vector": [0.5, 0.5]})" << "\n";
  EmbeddingStore store = EmbeddingStore::from_file(file.string());
  CHECK(store.size() == 2);
  CHECK(store.dimension() == 2);
  CHECK(store.ids() == std::vector<std::string>{"x", "y"});
  CHECK(store.vector("y")[0] == doctest::Approx(0.5f));
  fs::remove(file);
}

TEST_CASE("top_k picks the argmax and saturates") {
  EmbeddingStore store;
  store.insert("a", vec({1, 0}));
  store.insert("b", vec({0.9f, 0.1f}));
  store.insert("c", vec({0, 1}));
  auto best = top_k(vec({1, 0}), store, 1);
  REQUIRE(best.size() == 1);
  CHECK(best[0].id == "a");

  auto all = top_k(vec({1, 0}), store, 10);
  CHECK(all.size() == 3);
  CHECK(all[0].id == "a");
  CHECK(all[1].id == "b");
  CHECK(all[2].id == "c");
}

TEST_CASE("identical vectors rank by id") {
  EmbeddingStore store;
  store.insert("zed", vec({1, 1}));
  store.insert("abe", vec({1, 1}));
  auto out = top_k(vec({2, 2}), store, 2);
  CHECK(out[0].id == "abe");
  CHECK(out[1].id == "zed");
}

TEST_CASE("top_k agrees with the exhaustive reference on random stores") {
  std::mt19937 rng(1811);
  for (int trial = 0; trial < 100; ++trial) {
    size_t n = 1 + rng() % 300;
    size_t dim = 1 + rng() % 64;
    EmbeddingStore store = random_store(rng, n, dim);
    std::vector<float> q(dim);
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    for (auto& x : q) x = dist(rng);
    q[0] += 0.25f;
    if (std::all_of(q.begin(), q.end(), [](float x) { return x == 0.0f; })) q[0] = 1.0f;

    size_t k = 1 + rng() % (n + 3);
    auto got = top_k(q, store, k);
    auto want = top_k_reference(q, store, k);
    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].id == want[i].id);
      CHECK(got[i].cosine == doctest::Approx(want[i].cosine).epsilon(1e-9));
    }
  }
}

TEST_CASE("full-store ranking respects pairwise cosine order") {
  std::mt19937 rng(77);
  EmbeddingStore store = random_store(rng, 60, 5);
  std::vector<float> q = {1, 0.5f, -0.25f, 0, 0.75f};
  auto out = top_k(q, store, store.size());
  REQUIRE(out.size() == store.size());
  for (size_t i = 1; i < out.size(); ++i) {
    double prev = cosine(q, store.vector(out[i - 1].id));
    double cur = cosine(q, store.vector(out[i].id));
    CHECK(prev >= cur);
  }
}

TEST_CASE("baseline returns k nearest leaves with mapped scores") {
  EmbeddingStore store;
  store.insert("leaf_same", vec({1, 0}));
  store.insert("leaf_close", vec({0.8f, 0.6f}));
  store.insert("leaf_orth", vec({0, 1}));
  store.insert("leaf_anti", vec({-1, 0}));

  PredictionSet out = baseline_categorize(vec({1, 0}), store, 3);
  REQUIRE(out.predictions.size() == 3);
  CHECK(out.predictions[0].leaf_id == "leaf_same");
  CHECK(out.predictions[0].score == 10);
  CHECK(out.predictions[1].leaf_id == "leaf_close");
  CHECK(out.predictions[1].score == 9);
  CHECK(out.predictions[2].leaf_id == "leaf_orth");
  CHECK(out.predictions[2].score == 6);
  for (const auto& p : out.predictions) CHECK(p.leaf_id != "leaf_anti");
}

TEST_CASE("baseline saturates on small stores") {
  EmbeddingStore store;
  for (int i = 0; i < 8; ++i) {
    store.insert("leaf" + std::to_string(i), vec({float(i + 1), 1}));
  }
  PredictionSet out = baseline_categorize(vec({1, 0.5f}), store, 10);
  CHECK(out.predictions.size() == 8);
}

TEST_CASE("query equal to a stored leaf ranks it first") {
  EmbeddingStore store;
  store.insert("target", vec({0.3f, 0.7f, 0.1f}));
  store.insert("decoy", vec({1, 0, 0}));
  PredictionSet out = baseline_categorize(vec({0.3f, 0.7f, 0.1f}), store, 1);
  REQUIRE(out.predictions.size() == 1);
  CHECK(out.predictions[0].leaf_id == "target");
  CHECK(out.predictions[0].score == 10);
}

TEST_CASE("embedding scorer maps the query-node cosine") {
  EmbeddingStore queries;
  queries.insert("q1", vec({1, 0}));
  EmbeddingStore nodes;
  nodes.insert("same", vec({2, 0}));
  nodes.insert("orth", vec({0, 1}));

  EmbeddingScorer scorer(queries, nodes);
  ScoreRequest req;
  req.query_id = "q1";
  req.query = "whatever";
  req.node_id = "same";
  CHECK(scorer.score(req).value == 10);
  req.node_id = "orth";
  CHECK(scorer.score(req).value == 6);
  req.node_id = "missing";
  CHECK_THROWS_AS(scorer.score(req), RuntimeError);
}
