#include "taxonav/remote_scorer.hpp"

#include <httplib.h>

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

#include "taxonav/errors.hpp"
#include "taxonav/jsonl.hpp"

namespace taxonav {

namespace {

std::string get_string(const nlohmann::json& j, const char* field, const std::string& fallback) {
  if (!j.contains(field)) return fallback;
  if (!j.at(field).is_string()) {
    throw ValidationError(ErrorCode::InvalidConfig, std::string(field) + " must be a string");
  }
  return j.at(field).get<std::string>();
}

}  // namespace

RemoteScorerConfig remote_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw ValidationError(ErrorCode::InvalidConfig, "remote scorer config must be an object");
  }
  RemoteScorerConfig cfg;
  cfg.url = get_string(j, "url", "");
  cfg.model = get_string(j, "model", "");
  if (cfg.url.empty() || cfg.model.empty()) {
    throw ValidationError(ErrorCode::InvalidConfig, "remote scorer config needs url and model");
  }
  cfg.completion_path = get_string(j, "completion_path", cfg.completion_path);
  cfg.api_key_env = get_string(j, "api_key_env", cfg.api_key_env);
  cfg.cache_path = get_string(j, "cache_path", cfg.cache_path);
  cfg.tree_template = get_string(j, "tree_template", "");
  cfg.leaf_template = get_string(j, "leaf_template", "");
  if (j.contains("max_in_flight")) cfg.max_in_flight = j.at("max_in_flight").get<int>();
  if (j.contains("transport_retries")) cfg.transport_retries = j.at("transport_retries").get<int>();
  if (j.contains("backoff_base_seconds")) {
    cfg.backoff_base_seconds = j.at("backoff_base_seconds").get<double>();
  }
  if (j.contains("timeout_seconds")) cfg.timeout_seconds = j.at("timeout_seconds").get<int>();
  if (cfg.max_in_flight < 1 || cfg.transport_retries < 0 || cfg.backoff_base_seconds < 0) {
    throw ValidationError(ErrorCode::InvalidConfig, "remote scorer limits out of range");
  }
  return cfg;
}

RemoteScorerConfig remote_config_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError(ErrorCode::IoError, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(ErrorCode::InvalidConfig, path + ": " + e.what());
  }
  return remote_config_from_json(j);
}

// Bounds the number of requests on the wire at once.
struct RemoteScorer::Gate {
  explicit Gate(int limit) : slots(limit) {}
  std::mutex mu;
  std::condition_variable cv;
  int slots;

  void acquire() {
    std::unique_lock<std::mutex> lock(mu);
    cv.wait(lock, [&] { return slots > 0; });
    --slots;
  }
  void release() {
    {
      std::lock_guard<std::mutex> lock(mu);
      ++slots;
    }
    cv.notify_one();
  }
};

RemoteScorer::RemoteScorer(RemoteScorerConfig cfg) : cfg_(std::move(cfg)) {
  auto scheme_end = cfg_.url.find("://");
  if (scheme_end == std::string::npos) {
    throw ValidationError(ErrorCode::InvalidConfig, "url must include a scheme: " + cfg_.url);
  }
  auto path_pos = cfg_.url.find('/', scheme_end + 3);
  if (path_pos == std::string::npos) {
    base_ = cfg_.url;
    path_ = "/";
  } else {
    base_ = cfg_.url.substr(0, path_pos);
    path_ = cfg_.url.substr(path_pos);
  }
  if (cfg_.tree_template.empty()) cfg_.tree_template = default_tree_template();
  if (cfg_.leaf_template.empty()) cfg_.leaf_template = default_leaf_template();
  tree_version_ = template_version(cfg_.tree_template);
  leaf_version_ = template_version(cfg_.leaf_template);
  if (const char* key = std::getenv(cfg_.api_key_env.c_str())) api_key_ = key;
  if (!cfg_.cache_path.empty()) cache_ = std::make_unique<ScoreCache>(cfg_.cache_path);
  gate_ = std::make_unique<Gate>(cfg_.max_in_flight);
}

RemoteScorer::~RemoteScorer() = default;

std::string RemoteScorer::post_prompt(const std::string& prompt) {
  nlohmann::json payload{
      {"model", cfg_.model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", 0},
  };
  const std::string body = payload.dump();

  thread_local std::mt19937 jitter_rng(std::random_device{}());
  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.transport_retries; ++attempt) {
    if (attempt > 0) {
      double ceiling = cfg_.backoff_base_seconds * double(1 << (attempt - 1));
      std::uniform_real_distribution<double> jitter(0.0, ceiling);
      std::this_thread::sleep_for(std::chrono::duration<double>(jitter(jitter_rng)));
    }

    httplib::Client client(base_);
    client.set_connection_timeout(cfg_.timeout_seconds, 0);
    client.set_read_timeout(cfg_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    gate_->acquire();
    network_calls_.fetch_add(1);
    auto res = client.Post(path_, headers, body, "application/json");
    gate_->release();

    if (!res) {
      last_error = "connection failed: " + httplib::to_string(res.error());
      continue;  // transient, retry
    }
    if (res->status == 401 || res->status == 403) {
      throw RuntimeError(ErrorCode::AuthError,
                         "server returned " + std::to_string(res->status) + " for " + cfg_.url);
    }
    if (res->status >= 500) {
      last_error = "server returned " + std::to_string(res->status);
      continue;  // transient, retry
    }
    if (res->status != 200) {
      throw RuntimeError(ErrorCode::TransportError,
                         "server returned " + std::to_string(res->status) + " for " + cfg_.url);
    }

    try {
      nlohmann::json reply = nlohmann::json::parse(res->body);
      return reply.at(nlohmann::json::json_pointer(cfg_.completion_path)).get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw RuntimeError(ErrorCode::TransportError,
                         std::string("malformed completion response: ") + e.what());
    }
  }
  throw RuntimeError(ErrorCode::TransportError,
                     "retries exhausted for " + cfg_.url + " (" + last_error + ")");
}

SemanticScore RemoteScorer::score(const ScoreRequest& req) {
  const bool leaf = req.phase == ScorePhase::leaf;
  const std::string& tmpl = leaf ? cfg_.leaf_template : cfg_.tree_template;
  const std::string& version = leaf ? leaf_version_ : tree_version_;
  const std::string key = cache_key(version, req);

  if (cache_) {
    if (auto hit = cache_->get(key)) return SemanticScore{*hit, std::nullopt};
  }

  const std::string prompt = build_prompt(req, tmpl);
  std::string text = post_prompt(prompt);
  int value;
  try {
    value = parse_score(text, req.max_score);
  } catch (const RuntimeError& e) {
    if (e.code() != ErrorCode::NoScoreFound) throw;
    // one corrective re-prompt before giving up on this request
    text = post_prompt(prompt + "\n\nAnswer with only the integer.");
    value = parse_score(text, req.max_score);
  }

  if (cache_) cache_->put(key, value);
  return SemanticScore{value, text};
}

}  // namespace taxonav
