#include <doctest.h>

#include <filesystem>
#include <random>

#include "support/naive_eval.hpp"
#include "taxonav/errors.hpp"
#include "taxonav/eval.hpp"
#include "taxonav/jsonl.hpp"

using namespace taxonav;
using taxonav::testing::naive_mann_whitney;
using taxonav::testing::naive_metrics;

namespace {

// the two-query example used throughout: q1 pred {A,B} truth {A};
// q2 pred {C} truth {C,D}
GroundTruth worked_truth(bool judge_b) {
  GroundTruth t;
  t.add_judgment("q1", "A", true);
  if (judge_b) t.add_judgment("q1", "B", false);
  t.add_judgment("q2", "C", true);
  t.add_judgment("q2", "D", true);
  return t;
}

PredictionSets worked_predictions() {
  return {{"q1", {"A", "B"}}, {"q2", {"C"}}};
}

}  // namespace

TEST_CASE("perfect predictions score 1.0 everywhere") {
  GroundTruth t = worked_truth(true);
  PredictionSets perfect{{"q1", {"A"}}, {"q2", {"C", "D"}}};
  for (auto policy : {EvalPolicy::judged_only, EvalPolicy::open_world}) {
    MetricsReport r = compute_metrics(perfect, t, policy);
    CHECK(r.fp == 0);
    CHECK(r.fn == 0);
    for (const auto& s : {r.micro, r.samples, r.macro}) {
      CHECK(s.precision == 1.0);
      CHECK(s.recall == 1.0);
      CHECK(s.f1 == 1.0);
    }
  }
}

TEST_CASE("the worked example under the open-world policy") {
  MetricsReport r = compute_metrics(worked_predictions(), worked_truth(false),
                                    EvalPolicy::open_world);
  CHECK(r.tp == 2);
  CHECK(r.fp == 1);
  CHECK(r.fn == 1);
  CHECK(r.micro.precision == doctest::Approx(2.0 / 3.0));
  CHECK(r.micro.recall == doctest::Approx(2.0 / 3.0));
  CHECK(r.micro.f1 == doctest::Approx(2.0 / 3.0));
  // q1: P=1/2 R=1 F1=2/3; q2: P=1 R=1/2 F1=2/3
  CHECK(r.samples.f1 == doctest::Approx(2.0 / 3.0));
  // categories {A,B,C,D}: F1 = 1, 0, 1, 0
  CHECK(r.macro.f1 == doctest::Approx(0.5));
}

TEST_CASE("the worked example under the judged-only policy ignores the unjudged pair") {
  MetricsReport r = compute_metrics(worked_predictions(), worked_truth(false),
                                    EvalPolicy::judged_only);
  CHECK(r.tp == 2);
  CHECK(r.fp == 0);
  CHECK(r.fn == 1);
  CHECK(r.unjudged == 1);

  // judging B as irrelevant turns it back into a false positive
  MetricsReport judged = compute_metrics(worked_predictions(), worked_truth(true),
                                         EvalPolicy::judged_only);
  CHECK(judged.fp == 1);
  CHECK(judged.unjudged == 0);
}

TEST_CASE("empty prediction conventions") {
  GroundTruth t;
  t.register_query("hit");
  t.add_judgment("hit", "X", true);
  t.register_query("nothing");  // judged to have no relevant categories

  MetricsReport r = compute_metrics({}, t, EvalPolicy::judged_only);
  // "hit": total miss → 0; "nothing": empty/empty → 1
  CHECK(r.samples.precision == doctest::Approx(0.5));
  CHECK(r.samples.recall == doctest::Approx(0.5));
  CHECK(r.samples.f1 == doctest::Approx(0.5));
  CHECK(r.fn == 1);
}

TEST_CASE("predictions for a query the truth has never seen are rejected") {
  GroundTruth t = worked_truth(true);
  PredictionSets p{{"mystery", {"A"}}};
  try {
    compute_metrics(p, t, EvalPolicy::open_world);
    FAIL("expected UnknownQueryId");
  } catch (const ValidationError& e) {
    CHECK(e.code() == ErrorCode::UnknownQueryId);
  }
}

TEST_CASE("empty truth is rejected") {
  CHECK_THROWS_AS(compute_metrics({}, GroundTruth{}, EvalPolicy::judged_only), ValidationError);
}

TEST_CASE("conflicting judgments are rejected, repeated identical ones are fine") {
  GroundTruth t;
  t.add_judgment("q", "A", true);
  t.add_judgment("q", "A", true);
  CHECK_THROWS_AS(t.add_judgment("q", "A", false), ValidationError);
}

TEST_CASE("metrics match the exhaustive grid classification on random fixtures") {
  std::mt19937 rng(661);
  for (int trial = 0; trial < 100; ++trial) {
    int nq = 1 + int(rng() % 20);
    int nc = 1 + int(rng() % 15);
    GroundTruth truth;
    PredictionSets preds;
    for (int q = 0; q < nq; ++q) {
      std::string qid = "q" + std::to_string(q);
      truth.register_query(qid);
      for (int c = 0; c < nc; ++c) {
        std::string cid = "c" + std::to_string(c);
        int roll = int(rng() % 10);
        if (roll < 3) {
          truth.add_judgment(qid, cid, true);
        } else if (roll < 6) {
          truth.add_judgment(qid, cid, false);
        }
        if (rng() % 3 == 0) preds[qid].insert(cid);
      }
    }
    for (auto policy : {EvalPolicy::judged_only, EvalPolicy::open_world}) {
      MetricsReport got = compute_metrics(preds, truth, policy);
      auto want = naive_metrics(preds, truth, policy);
      CHECK(got.tp == want.tp);
      CHECK(got.fp == want.fp);
      CHECK(got.fn == want.fn);
      CHECK(got.unjudged == want.unjudged);
      CHECK(got.micro.f1 == doctest::Approx(want.micro_f1).epsilon(1e-12));
      CHECK(got.samples.precision == doctest::Approx(want.samples_p).epsilon(1e-12));
      CHECK(got.samples.recall == doctest::Approx(want.samples_r).epsilon(1e-12));
      CHECK(got.samples.f1 == doctest::Approx(want.samples_f1).epsilon(1e-12));
      CHECK(got.macro.precision == doctest::Approx(want.macro_p).epsilon(1e-12));
      CHECK(got.macro.f1 == doctest::Approx(want.macro_f1).epsilon(1e-12));
    }
  }
}

TEST_CASE("judgments round-trip through the file format") {
  GroundTruth t = worked_truth(true);
  t.register_query("silent");

  auto path = std::filesystem::temp_directory_path() / "taxonav_truth_roundtrip.jsonl";
  atomic_write(path.string(), serialize_ground_truth(t));
  GroundTruth back = ground_truth_from_file(path.string());
  CHECK(back.relevant() == t.relevant());
  CHECK(back.judged() == t.judged());
  CHECK(back.knows("silent"));
  std::filesystem::remove(path);
}

TEST_CASE("malformed judgment records are rejected") {
  CHECK_THROWS_AS(ground_truth_from_records({{{"leaf_id", "A"}, {"relevant", true}}}),
                  ValidationError);
  CHECK_THROWS_AS(ground_truth_from_records({{{"query_id", "q"}, {"leaf_id", "A"}}}),
                  ValidationError);
  CHECK_THROWS_AS(
      ground_truth_from_records({{{"query_id", "q"}, {"leaf_id", 3}, {"relevant", true}}}),
      ValidationError);
}

TEST_CASE("grid search evaluates the default pairs and picks the argmax") {
  GroundTruth t = worked_truth(true);
  auto run = [&](int s, int m) -> PredictionSets {
    if (s == 9 && m == 7) return {{"q1", {"A"}}, {"q2", {"C", "D"}}};  // perfect
    return worked_predictions();
  };
  GridSearchResult r = grid_search(run, t, EvalPolicy::open_world, Aggregation::samples);
  REQUIRE(r.points.size() == 3);
  CHECK(r.points[0].selection == 8);
  CHECK(r.points[0].minimum == 7);
  CHECK(r.chosen_selection == 9);
  CHECK(r.chosen_minimum == 7);
  CHECK(r.points[1].samples_f1 == doctest::Approx(1.0));
}

TEST_CASE("grid search breaks ties toward larger thresholds") {
  GroundTruth t = worked_truth(true);
  auto run = [&](int, int) { return worked_predictions(); };
  GridSearchResult r = grid_search(run, t, EvalPolicy::open_world, Aggregation::samples);
  CHECK(r.chosen_selection == 9);
  CHECK(r.chosen_minimum == 8);
}

TEST_CASE("grid search rejects candidates violating the threshold constraint") {
  GroundTruth t = worked_truth(true);
  auto run = [&](int, int) { return worked_predictions(); };
  CHECK_THROWS_AS(
      grid_search(run, t, EvalPolicy::open_world, Aggregation::samples, {{7, 7}}),
      ValidationError);
  CHECK_THROWS_AS(
      grid_search(run, t, EvalPolicy::open_world, Aggregation::samples, {{7, 5}}),
      ValidationError);
  CHECK_THROWS_AS(grid_search(run, t, EvalPolicy::open_world, Aggregation::samples, {}),
                  ValidationError);
}

TEST_CASE("pseudo reference filters, rescoring only the survivors") {
  Taxonomy t = load_taxonomy({
      {{"id", "root"}, {"parent_id", nullptr}, {"name", "Root"}},
      {{"id", "near"}, {"parent_id", "root"}, {"name", "Near"}},
      {{"id", "mid"}, {"parent_id", "root"}, {"name", "Mid"}},
      {{"id", "far"}, {"parent_id", "root"}, {"name", "Far"}},
  });
  EmbeddingStore leaves;
  leaves.insert("near", {1.0f, 0.0f});
  leaves.insert("mid", {0.6f, 0.8f});
  leaves.insert("far", {-1.0f, 0.0f});  // cosine -1, below every min_cosine
  EmbeddingStore qvecs;
  qvecs.insert("q", {1.0f, 0.0f});

  MockScorer scorer(1);
  scorer.add("q", "near", "", ScorePhase::leaf, 9);
  scorer.add("q", "mid", "", ScorePhase::leaf, 5);

  std::vector<Query> queries{{"q", "q", {}}};  // mock entries key on the query text
  GroundTruth truth = pseudo_reference(queries, qvecs, t, leaves, scorer, 100, 0.01, 7);
  CHECK(truth.relevant().at("q") == std::set<std::string>{"near"});
  CHECK(truth.judged().count({"q", "near"}) == 1);
  CHECK(truth.judged().count({"q", "mid"}) == 1);
  CHECK(truth.judged().count({"q", "far"}) == 0);
  CHECK(scorer.leaf_calls() == 2);

  // a vacuous cutoff marks every surviving pair relevant
  MockScorer vac(1);
  vac.add("q", "near", "", ScorePhase::leaf, 9);
  vac.add("q", "mid", "", ScorePhase::leaf, 5);
  GroundTruth all = pseudo_reference(queries, qvecs, t, leaves, vac, 100, 0.01, 1);
  CHECK(all.relevant().at("q") == std::set<std::string>{"near", "mid"});
}

TEST_CASE("pseudo reference registers queries whose pool filters to nothing") {
  Taxonomy t = load_taxonomy({
      {{"id", "root"}, {"parent_id", nullptr}, {"name", "Root"}},
      {{"id", "leaf"}, {"parent_id", "root"}, {"name", "Leaf"}},
  });
  EmbeddingStore leaves;
  leaves.insert("leaf", {-1.0f, 0.0f});
  EmbeddingStore qvecs;
  qvecs.insert("q", {1.0f, 0.0f});
  MockScorer scorer(10);  // would mark anything relevant, must never be called

  GroundTruth truth =
      pseudo_reference({{"q", "q text", {}}}, qvecs, t, leaves, scorer, 100, 0.01, 7);
  CHECK(truth.knows("q"));
  CHECK(truth.relevant().at("q").empty());
  CHECK(truth.judged().empty());
  CHECK(scorer.leaf_calls() == 0);
  CHECK(scorer.tree_calls() == 0);

  // such a truth still evaluates: empty predictions score a perfect 1.0
  MetricsReport r = compute_metrics({}, truth, EvalPolicy::open_world);
  CHECK(r.samples.f1 == 1.0);
}

TEST_CASE("pseudo reference respects k") {
  Taxonomy t = load_taxonomy({
      {{"id", "root"}, {"parent_id", nullptr}, {"name", "Root"}},
      {{"id", "a"}, {"parent_id", "root"}, {"name", "A"}},
      {{"id", "b"}, {"parent_id", "root"}, {"name", "B"}},
      {{"id", "c"}, {"parent_id", "root"}, {"name", "C"}},
  });
  EmbeddingStore leaves;
  leaves.insert("a", {1.0f, 0.0f});
  leaves.insert("b", {0.9f, 0.1f});
  leaves.insert("c", {0.5f, 0.5f});
  EmbeddingStore qvecs;
  qvecs.insert("q", {1.0f, 0.0f});
  MockScorer scorer(8);
  GroundTruth truth = pseudo_reference({{"q", "q", {}}}, qvecs, t, leaves, scorer, 2, 0.01, 7);
  CHECK(truth.judged().size() == 2);
  CHECK(truth.judged().count({"q", "c"}) == 0);
}

TEST_CASE("U statistic matches hand enumeration") {
  auto r = mann_whitney_u({3, 4}, {1, 2});
  CHECK(r.u == 4.0);
  CHECK(mann_whitney_u({1, 2}, {3, 4}).u == 0.0);
  CHECK(mann_whitney_u({5}, {5}).u == 0.5);
}

TEST_CASE("U antisymmetry identity holds on random samples") {
  std::mt19937 rng(909);
  std::uniform_int_distribution<int> value(0, 8);  // heavy ties on purpose
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(1 + rng() % 30), b(1 + rng() % 30);
    for (auto& x : a) x = value(rng);
    for (auto& x : b) x = value(rng);
    auto ab = mann_whitney_u(a, b);
    auto ba = mann_whitney_u(b, a);
    CHECK(ab.u + ba.u == doctest::Approx(double(a.size() * b.size())).epsilon(1e-12));
    CHECK(ab.p == doctest::Approx(ba.p).epsilon(1e-12));
  }
}

TEST_CASE("U and p match the extended-precision pair-sum reference") {
  std::mt19937 rng(4242);
  std::uniform_int_distribution<int> value(0, 12);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<double> a(2 + rng() % 40), b(2 + rng() % 40);
    for (auto& x : a) x = value(rng);
    for (auto& x : b) x = value(rng);
    auto got = mann_whitney_u(a, b);
    auto want = naive_mann_whitney(a, b);
    CHECK(got.u == doctest::Approx(double(want.u)).epsilon(1e-12));
    CHECK(got.p == doctest::Approx(double(want.p)).epsilon(1e-9));
  }
}

TEST_CASE("identical constant samples yield p = 1") {
  auto r = mann_whitney_u({2, 2, 2}, {2, 2});
  CHECK(r.u == 3.0);  // all ties at 0.5 each
  CHECK(r.p == 1.0);
}

TEST_CASE("clearly separated samples yield a tiny p") {
  std::vector<double> high(40, 0), low(40, 0);
  for (int i = 0; i < 40; ++i) {
    high[i] = 100 + i;
    low[i] = i;
  }
  auto r = mann_whitney_u(high, low);
  CHECK(r.u == 1600.0);
  CHECK(r.p < 1e-10);
}

TEST_CASE("large identically distributed samples sit near the null") {
  std::mt19937 rng(31337);
  std::normal_distribution<double> dist(0, 1);
  std::vector<double> a(300), b(300);
  for (auto& x : a) x = dist(rng);
  for (auto& x : b) x = dist(rng);
  auto r = mann_whitney_u(a, b);
  double mean = 300.0 * 300.0 / 2.0;
  CHECK(std::abs(r.u - mean) < 0.15 * mean);
  CHECK(r.p > 0.01);
}

TEST_CASE("empty samples are rejected") {
  CHECK_THROWS_AS(mann_whitney_u({}, {1.0}), ValidationError);
  CHECK_THROWS_AS(mann_whitney_u({1.0}, {}), ValidationError);
}

TEST_CASE("duplicate prediction lines for one query are rejected at load") {
  auto path = std::filesystem::temp_directory_path() / "taxonav_dup_preds.jsonl";
  atomic_write(path.string(),
               R"({"query_id":"q","predictions":[{"leaf_id":"a","score":9}]})"
               "\n"
               R"({"query_id":"q","predictions":[{"leaf_id":"b","score":8}]})"
               "\n");
  CHECK_THROWS_AS(prediction_sets_from_file(path.string()), ValidationError);
  std::filesystem::remove(path);
}
