#include "taxonav/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

#include "taxonav/errors.hpp"
#include "taxonav/jsonl.hpp"
#include "taxonav/predictions.hpp"

namespace taxonav {

void GroundTruth::register_query(const std::string& query_id) {
  relevant_.try_emplace(query_id);
}

void GroundTruth::add_judgment(const std::string& query_id, const std::string& leaf_id,
                               bool relevant) {
  auto pair = std::make_pair(query_id, leaf_id);
  bool already_relevant = relevant_.count(query_id) && relevant_.at(query_id).count(leaf_id);
  if (judged_.count(pair) && already_relevant != relevant) {
    throw ValidationError(ErrorCode::InvalidInput,
                          "conflicting judgments for (" + query_id + ", " + leaf_id + ")");
  }
  register_query(query_id);
  judged_.insert(pair);
  if (relevant) relevant_[query_id].insert(leaf_id);
}

bool GroundTruth::knows(const std::string& query_id) const {
  return relevant_.count(query_id) > 0;
}

GroundTruth ground_truth_from_records(const std::vector<nlohmann::json>& records) {
  GroundTruth truth;
  for (const auto& rec : records) {
    if (rec.contains("meta")) continue;  // provenance line from an earlier run
    if (!rec.contains("query_id") || !rec.at("query_id").is_string()) {
      throw ValidationError(ErrorCode::InvalidInput, "judgment record needs a query_id string");
    }
    std::string query_id = rec.at("query_id").get<std::string>();
    if (!rec.contains("leaf_id")) {
      truth.register_query(query_id);  // query known, nothing judged for it
      continue;
    }
    if (!rec.at("leaf_id").is_string() || !rec.contains("relevant") ||
        !rec.at("relevant").is_boolean()) {
      throw ValidationError(ErrorCode::InvalidInput,
                            "judgment record needs leaf_id string and relevant bool");
    }
    truth.add_judgment(query_id, rec.at("leaf_id").get<std::string>(),
                       rec.at("relevant").get<bool>());
  }
  return truth;
}

GroundTruth ground_truth_from_file(const std::string& path) {
  return ground_truth_from_records(read_jsonl(path));
}

std::string serialize_ground_truth(const GroundTruth& truth) {
  std::ostringstream out;
  for (const auto& [query_id, leaves] : truth.relevant()) {
    bool any = false;
    for (const auto& [jq, jl] : truth.judged()) {
      if (jq != query_id) continue;
      any = true;
      out << nlohmann::json{{"query_id", jq},
                            {"leaf_id", jl},
                            {"relevant", leaves.count(jl) > 0}}
                 .dump()
          << "\n";
    }
    if (!any) out << nlohmann::json{{"query_id", query_id}}.dump() << "\n";
  }
  return out.str();
}

PredictionSets prediction_sets_from_file(const std::string& path) {
  PredictionSets out;
  for (const auto& rec : read_jsonl(path)) {
    if (rec.contains("meta")) continue;  // provenance line from an earlier run
    PredictionSet ps = prediction_set_from_json(rec);
    auto [it, inserted] = out.try_emplace(ps.query_id);
    if (!inserted) {
      throw ValidationError(ErrorCode::InvalidInput,
                            path + ": duplicate predictions for query " + ps.query_id);
    }
    for (const auto& p : ps.predictions) it->second.insert(p.leaf_id);
  }
  return out;
}

std::string eval_policy_name(EvalPolicy policy) {
  return policy == EvalPolicy::judged_only ? "judged_only" : "open_world";
}

EvalPolicy eval_policy_from_name(const std::string& name) {
  if (name == "judged_only" || name == "judged-only") return EvalPolicy::judged_only;
  if (name == "open_world" || name == "open-world") return EvalPolicy::open_world;
  throw ValidationError(ErrorCode::InvalidConfig, "unknown evaluation policy: " + name);
}

PairClassification confusion(const PredictionSets& predictions, const GroundTruth& truth,
                             EvalPolicy policy) {
  for (const auto& [query_id, leaves] : predictions) {
    (void)leaves;
    if (!truth.knows(query_id)) {
      throw ValidationError(ErrorCode::UnknownQueryId,
                            "predictions for unknown query: " + query_id);
    }
  }

  PairClassification out;
  for (const auto& [query_id, relevant] : truth.relevant()) {
    static const std::set<std::string> kEmpty;
    auto pred_it = predictions.find(query_id);
    const std::set<std::string>& predicted = pred_it == predictions.end() ? kEmpty
                                                                          : pred_it->second;
    for (const auto& leaf : predicted) {
      auto pair = std::make_pair(query_id, leaf);
      if (relevant.count(leaf)) {
        out.tp.insert(pair);
      } else if (policy == EvalPolicy::open_world) {
        out.fp.insert(pair);
      } else if (truth.judged().count(pair)) {
        out.fp.insert(pair);
      } else {
        ++out.unjudged;
      }
    }
    for (const auto& leaf : relevant) {
      if (!predicted.count(leaf)) out.fn.insert({query_id, leaf});
    }
  }
  return out;
}

namespace {

MetricSlice slice_from_counts(long tp, long fp, long fn) {
  MetricSlice s;
  s.precision = tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
  s.recall = tp + fn > 0 ? double(tp) / double(tp + fn) : 0.0;
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall)
                                    : 0.0;
  return s;
}

}  // namespace

MetricsReport compute_metrics(const PredictionSets& predictions, const GroundTruth& truth,
                              EvalPolicy policy) {
  if (truth.relevant().empty()) {
    throw ValidationError(ErrorCode::EmptyEvaluation, "ground truth contains no queries");
  }
  PairClassification cls = confusion(predictions, truth, policy);

  MetricsReport report;
  report.policy = policy;
  report.tp = long(cls.tp.size());
  report.fp = long(cls.fp.size());
  report.fn = long(cls.fn.size());
  report.unjudged = cls.unjudged;
  report.micro = slice_from_counts(report.tp, report.fp, report.fn);

  // samples: average per-query slices over every query in the truth
  double psum = 0, rsum = 0, fsum = 0;
  long nq = 0;
  for (const auto& [query_id, relevant] : truth.relevant()) {
    ++nq;
    long tp = 0, fp = 0, fn = 0;
    for (const auto& pair : cls.tp) tp += pair.first == query_id;
    for (const auto& pair : cls.fp) fp += pair.first == query_id;
    for (const auto& pair : cls.fn) fn += pair.first == query_id;
    auto pred_it = predictions.find(query_id);
    bool empty_prediction = pred_it == predictions.end() || pred_it->second.empty();
    MetricSlice s;
    if (empty_prediction && relevant.empty()) {
      s = MetricSlice{1.0, 1.0, 1.0};
    } else {
      s = slice_from_counts(tp, fp, fn);
    }
    psum += s.precision;
    rsum += s.recall;
    fsum += s.f1;
  }
  report.samples = MetricSlice{psum / nq, rsum / nq, fsum / nq};

  // macro: average per-category slices over every category that is relevant
  // somewhere or predicted somewhere; categories only ever judged irrelevant
  // carry no signal and would dilute the average with structural zeros
  std::set<std::string> categories;
  for (const auto& [query_id, leaves] : predictions) {
    (void)query_id;
    categories.insert(leaves.begin(), leaves.end());
  }
  for (const auto& [query_id, leaves] : truth.relevant()) {
    (void)query_id;
    categories.insert(leaves.begin(), leaves.end());
  }
  if (!categories.empty()) {
    std::map<std::string, std::array<long, 3>> counts;
    for (const auto& c : categories) counts[c] = {0, 0, 0};
    for (const auto& pair : cls.tp) ++counts[pair.second][0];
    for (const auto& pair : cls.fp) ++counts[pair.second][1];
    for (const auto& pair : cls.fn) ++counts[pair.second][2];
    double cp = 0, cr = 0, cf = 0;
    for (const auto& [cat, c] : counts) {
      (void)cat;
      MetricSlice s = slice_from_counts(c[0], c[1], c[2]);
      cp += s.precision;
      cr += s.recall;
      cf += s.f1;
    }
    double n = double(categories.size());
    report.macro = MetricSlice{cp / n, cr / n, cf / n};
  }
  return report;
}

nlohmann::json metrics_to_json(const MetricsReport& report) {
  auto slice = [](const MetricSlice& s) {
    return nlohmann::json{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
  };
  return nlohmann::json{
      {"policy", eval_policy_name(report.policy)},
      {"counts",
       {{"tp", report.tp}, {"fp", report.fp}, {"fn", report.fn}, {"unjudged", report.unjudged}}},
      {"micro", slice(report.micro)},
      {"samples", slice(report.samples)},
      {"macro", slice(report.macro)},
  };
}

std::string aggregation_name(Aggregation a) {
  switch (a) {
    case Aggregation::micro: return "micro";
    case Aggregation::samples: return "samples";
    case Aggregation::macro: return "macro";
  }
  return "samples";
}

Aggregation aggregation_from_name(const std::string& name) {
  if (name == "micro") return Aggregation::micro;
  if (name == "samples") return Aggregation::samples;
  if (name == "macro") return Aggregation::macro;
  throw ValidationError(ErrorCode::InvalidConfig, "unknown aggregation: " + name);
}

std::vector<std::pair<int, int>> default_grid_candidates() {
  return {{8, 7}, {9, 7}, {9, 8}};
}

GridSearchResult grid_search(const std::function<PredictionSets(int, int)>& run,
                             const GroundTruth& truth, EvalPolicy policy, Aggregation objective,
                             const std::vector<std::pair<int, int>>& candidates) {
  if (candidates.empty()) {
    throw ValidationError(ErrorCode::InvalidConfig, "grid search needs candidate thresholds");
  }
  for (const auto& [s, m] : candidates) {
    if (!(s > m && m >= 6)) {
      throw ValidationError(ErrorCode::InvalidConfig,
                            "grid candidates must satisfy selection > minimum >= 6; got (" +
                                std::to_string(s) + ", " + std::to_string(m) + ")");
    }
  }

  GridSearchResult result;
  double best = -1;
  for (const auto& [s, m] : candidates) {
    MetricsReport report = compute_metrics(run(s, m), truth, policy);
    GridPoint point{s, m, report.samples.f1, report.micro.f1, report.macro.f1};
    result.points.push_back(point);
    double objective_f1 = objective == Aggregation::micro    ? point.micro_f1
                          : objective == Aggregation::macro ? point.macro_f1
                                                            : point.samples_f1;
    bool better = objective_f1 > best;
    bool tied = objective_f1 == best;
    bool wins_tie = s > result.chosen_selection ||
                    (s == result.chosen_selection && m > result.chosen_minimum);
    if (better || (tied && wins_tie)) {
      best = objective_f1;
      result.chosen_selection = s;
      result.chosen_minimum = m;
    }
  }
  return result;
}

nlohmann::json grid_search_to_json(const GridSearchResult& result) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : result.points) {
    points.push_back({{"selection", p.selection},
                      {"minimum", p.minimum},
                      {"samples_f1", p.samples_f1},
                      {"micro_f1", p.micro_f1},
                      {"macro_f1", p.macro_f1}});
  }
  return nlohmann::json{{"points", points},
                        {"chosen", {{"selection", result.chosen_selection},
                                    {"minimum", result.chosen_minimum}}}};
}

GroundTruth pseudo_reference(const std::vector<Query>& queries,
                             const EmbeddingStore& query_vectors, const Taxonomy& taxonomy,
                             const EmbeddingStore& leaf_store, SemanticScorer& strong_scorer,
                             int k, double min_cosine, int relevance_cutoff, int max_score) {
  if (k < 1) throw ValidationError(ErrorCode::InvalidConfig, "k must be at least 1");
  if (relevance_cutoff < 1 || relevance_cutoff > max_score) {
    throw ValidationError(ErrorCode::InvalidConfig, "relevance cutoff must lie in [1, R]");
  }

  GroundTruth truth;
  for (const auto& q : queries) {
    truth.register_query(q.id);
    const std::vector<float>& qvec = query_vectors.vector(q.id);
    for (const auto& neighbor : top_k(qvec, leaf_store, size_t(k))) {
      if (neighbor.cosine < min_cosine) continue;
      const CategoryNode& node = taxonomy.node(neighbor.id);
      ScoreRequest req;
      req.query_id = q.id;
      req.query = q.text;
      req.path_text = render_path(path_to_root(taxonomy, neighbor.id), taxonomy);
      req.parent_name =
          node.parent_id ? taxonomy.node(*node.parent_id).name : node.name;
      req.node_name = node.name;
      req.node_id = neighbor.id;
      req.description = node.description;
      req.context = q.context;
      req.max_score = max_score;
      req.phase = ScorePhase::leaf;
      int value = strong_scorer.score(req).value;
      truth.add_judgment(q.id, neighbor.id, value >= relevance_cutoff);
    }
  }
  return truth;
}

MannWhitneyResult mann_whitney_u(const std::vector<double>& sample_a,
                                 const std::vector<double>& sample_b) {
  if (sample_a.empty() || sample_b.empty()) {
    throw ValidationError(ErrorCode::EmptySample, "both samples must be non-empty");
  }
  const size_t na = sample_a.size(), nb = sample_b.size();
  const size_t n = na + nb;

  // midranks over the pooled sample; first element of the pair marks membership
  std::vector<std::pair<double, int>> pooled;
  pooled.reserve(n);
  for (double v : sample_a) pooled.emplace_back(v, 0);
  for (double v : sample_b) pooled.emplace_back(v, 1);
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });

  double rank_sum_a = 0;
  double tie_correction = 0;  // sum of t^3 - t over tie groups
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && pooled[j].first == pooled[i].first) ++j;
    double midrank = (double(i + 1) + double(j)) / 2.0;
    double t = double(j - i);
    tie_correction += t * t * t - t;
    for (size_t idx = i; idx < j; ++idx) {
      if (pooled[idx].second == 0) rank_sum_a += midrank;
    }
    i = j;
  }

  MannWhitneyResult out;
  out.u = rank_sum_a - double(na) * (double(na) + 1) / 2.0;

  const double prod = double(na) * double(nb);
  const double mean = prod / 2.0;
  double variance = prod / 12.0 *
                    (double(n) + 1 - tie_correction / (double(n) * (double(n) - 1)));
  if (variance <= 0) {
    out.p = 1.0;
    return out;
  }
  double z = (std::max(out.u, prod - out.u) - mean - 0.5) / std::sqrt(variance);
  out.p = std::min(1.0, std::max(0.0, std::erfc(z / std::sqrt(2.0))));
  return out;
}

}  // namespace taxonav
