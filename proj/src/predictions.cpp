#include "taxonav/predictions.hpp"

#include <algorithm>

#include "taxonav/errors.hpp"

namespace taxonav {

void sort_predictions(std::vector<Prediction>& preds) {
  std::sort(preds.begin(), preds.end(), [](const Prediction& a, const Prediction& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.leaf_id < b.leaf_id;
  });
}

nlohmann::json prediction_set_to_json(const PredictionSet& ps) {
  nlohmann::json preds = nlohmann::json::array();
  for (const auto& p : ps.predictions) {
    preds.push_back({{"leaf_id", p.leaf_id}, {"score", p.score}});
  }
  return {{"query_id", ps.query_id}, {"predictions", preds}};
}

PredictionSet prediction_set_from_json(const nlohmann::json& obj) {
  PredictionSet ps;
  if (!obj.contains("query_id") || !obj["query_id"].is_string()) {
    throw ValidationError(ErrorCode::InvalidInput, "prediction record without query_id");
  }
  ps.query_id = obj["query_id"].get<std::string>();
  if (obj.contains("predictions")) {
    if (!obj["predictions"].is_array()) {
      throw ValidationError(ErrorCode::InvalidInput,
                            "predictions for " + ps.query_id + " must be an array");
    }
    for (const auto& p : obj["predictions"]) {
      if (!p.contains("leaf_id") || !p["leaf_id"].is_string() || !p.contains("score") ||
          !p["score"].is_number_integer()) {
        throw ValidationError(ErrorCode::InvalidInput,
                              "bad prediction entry for query " + ps.query_id);
      }
      ps.predictions.push_back({p["leaf_id"].get<std::string>(), p["score"].get<int>()});
    }
  }
  return ps;
}

}  // namespace taxonav
