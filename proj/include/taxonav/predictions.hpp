#pragma once

#include <json.hpp>
#include <string>
#include <vector>

namespace taxonav {

struct Prediction {
  std::string leaf_id;
  int score = 0;
};

// Final output for one query: leaf categories ordered by score descending,
// leaf id ascending on ties.
struct PredictionSet {
  std::string query_id;
  std::vector<Prediction> predictions;
};

inline bool operator==(const Prediction& a, const Prediction& b) {
  return a.leaf_id == b.leaf_id && a.score == b.score;
}
inline bool operator==(const PredictionSet& a, const PredictionSet& b) {
  return a.query_id == b.query_id && a.predictions == b.predictions;
}

// Canonical ordering: score descending, leaf id ascending.
void sort_predictions(std::vector<Prediction>& preds);

nlohmann::json prediction_set_to_json(const PredictionSet& ps);
PredictionSet prediction_set_from_json(const nlohmann::json& obj);

}  // namespace taxonav
