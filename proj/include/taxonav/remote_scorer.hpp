#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <string>

#include "taxonav/scoring.hpp"

namespace taxonav {

struct RemoteScorerConfig {
  std::string url;  // full endpoint URL, e.g. http://host:8080/v1/chat/completions
  std::string model;
  std::string completion_path = "/choices/0/message/content";  // JSON pointer into the response
  std::string api_key_env = "TAXONAV_API_KEY";
  std::string cache_path;  // empty disables caching
  std::string tree_template;
  std::string leaf_template;
  int max_in_flight = 8;
  int transport_retries = 3;
  double backoff_base_seconds = 0.5;
  int timeout_seconds = 60;
};

RemoteScorerConfig remote_config_from_json(const nlohmann::json& j);
RemoteScorerConfig remote_config_from_file(const std::string& path);

// Chat-completion HTTP scorer. Builds the prompt, POSTs
// {model, messages, temperature: 0}, extracts the completion text and parses
// the score out of it. Results are cached by cache_key when a cache path is
// configured; cache hits never touch the network.
class RemoteScorer : public SemanticScorer {
 public:
  explicit RemoteScorer(RemoteScorerConfig cfg);
  ~RemoteScorer() override;

  SemanticScore score(const ScoreRequest& req) override;

  long network_calls() const { return network_calls_.load(); }

 private:
  std::string post_prompt(const std::string& prompt);

  RemoteScorerConfig cfg_;
  std::string base_;
  std::string path_;
  std::string api_key_;
  std::string tree_version_;
  std::string leaf_version_;
  std::unique_ptr<ScoreCache> cache_;
  std::atomic<long> network_calls_{0};
  struct Gate;
  std::unique_ptr<Gate> gate_;
};

}  // namespace taxonav
