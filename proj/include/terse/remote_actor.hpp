#pragma once

// HTTP client for a remote action-scoring endpoint.
//
// Wire contract: POST <path> with body
//   {"state_text": str, "task_description": str, "actions": [str...],
//    "fewshot": [str...]}
// and the endpoint answers {"scores": [float...]} with one monotone scalar
// per action. Scores are softmax-normalized locally, so any serving stack
// that can rank actions can implement the adapter.

#include <chrono>
#include <string>
#include <thread>

#include <httplib.h>

#include "terse/actor.hpp"
#include "terse/core.hpp"

namespace terse {

struct RemoteActorConfig {
  std::string base_url;        // e.g. "http://localhost:8080"
  std::string path = "/score";
  int timeout_ms = 5000;
  int max_retries = 3;         // attempts = max_retries + 1
  int backoff_ms = 100;        // doubled after every failed attempt
};

class RemoteActor : public Actor {
 public:
  explicit RemoteActor(RemoteActorConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) {
      throw ConfigError("remote actor needs an endpoint URL");
    }
  }

  // Safe to call from many threads at once: every request uses its own
  // connection.
  ActionDistribution score_actions(const ActorQuery& q) const override {
    validate_query(q);
    json body;
    body["state_text"] = q.state_text;
    body["task_description"] = q.task.description;
    json actions = json::array();
    for (const ActionLabel& a : q.admissible) actions.push_back(a.text);
    body["actions"] = std::move(actions);
    body["fewshot"] = q.fewshot;
    const std::string payload = body.dump();

    std::string last_error;
    int backoff = config_.backoff_ms;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
        backoff *= 2;
      }
      httplib::Client client(config_.base_url);
      client.set_connection_timeout(0, config_.timeout_ms * 1000);
      client.set_read_timeout(0, config_.timeout_ms * 1000);
      auto res = client.Post(config_.path, payload, "application/json");
      if (!res) {
        last_error = "no response (" + httplib::to_string(res.error()) + ")";
        continue;
      }
      if (res->status != 200) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      return parse_scores(res->body, q);
    }
    throw ActorError("endpoint unreachable after " +
                     std::to_string(config_.max_retries + 1) + " attempts: " +
                     last_error);
  }

 private:
  ActionDistribution parse_scores(const std::string& body,
                                  const ActorQuery& q) const {
    json j;
    try {
      j = json::parse(body);
    } catch (const json::exception& e) {
      throw ActorError(std::string("malformed response: ") + e.what());
    }
    if (!j.contains("scores") || !j["scores"].is_array()) {
      throw ActorError("malformed response: missing 'scores' array");
    }
    std::vector<double> scores;
    for (const json& v : j["scores"]) {
      if (!v.is_number()) {
        throw ActorError("malformed response: non-numeric score");
      }
      scores.push_back(v.get<double>());
    }
    if (scores.size() != q.admissible.size()) {
      throw ActorError("malformed response: got " +
                       std::to_string(scores.size()) + " scores for " +
                       std::to_string(q.admissible.size()) + " actions");
    }
    for (double s : scores) {
      if (!std::isfinite(s)) {
        throw ActorError("malformed response: non-finite score");
      }
    }
    return ActionDistribution::from_weights(q.admissible, softmax(scores));
  }

  RemoteActorConfig config_;
};

}  // namespace terse
