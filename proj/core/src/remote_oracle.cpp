#include "planedit/remote_oracle.hpp"

#include <chrono>
#include <httplib.h>
#include <json.hpp>
#include <thread>

#include "planedit/util.hpp"

namespace planedit {

namespace {

nlohmann::json candidate_record(std::span<const TokenId> candidate,
                                const Vocabulary& vocab) {
  nlohmann::json tokens = nlohmann::json::array();
  for (TokenId t : candidate) {
    tokens.push_back(vocab.contains(t) ? vocab.spelling(t)
                                       : "#" + std::to_string(t));
  }
  return {{"tokens", tokens}};
}

std::string content_hash(const std::string& body) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(body)));
  return buf;
}

}  // namespace

RemoteRewardOracle::RemoteRewardOracle(RemoteOracleConfig config,
                                       const Vocabulary& vocab)
    : config_(std::move(config)), vocab_(&vocab) {
  if (config_.endpoint.empty()) {
    throw ConfigError("remote oracle endpoint is empty");
  }
}

ScoreDistribution RemoteRewardOracle::post_score(const std::string& payload,
                                                 const std::string& request_id) {
  httplib::Client client(config_.endpoint);
  client.set_connection_timeout(0, config_.timeout_ms * 1000);
  client.set_read_timeout(0, config_.timeout_ms * 1000);

  int backoff_ms = config_.initial_backoff_ms;
  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
      backoff_ms = std::min(backoff_ms * 2, 2000);
    }
    auto res = client.Post("/score", payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "http status " + std::to_string(res->status);
      continue;
    }

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw OracleMalformedError(std::string("unparseable oracle response: ") +
                                 e.what());
    }
    if (j.value("request_id", "") != request_id) {
      throw OracleMalformedError("oracle response for wrong request id");
    }
    ScoreDistribution d;
    d.values = ScoreDistribution::six_point_values();
    d.probs.assign(d.values.size(), 0.0);
    const auto& probs = j.at("score_probs");
    for (size_t i = 0; i < d.values.size(); ++i) {
      d.probs[i] = probs.value(std::to_string(i), 0.0);
    }
    d.validate();
    return d;
  }
  throw OracleUnavailableError("oracle unreachable after " +
                               std::to_string(config_.max_retries + 1) +
                               " attempts (" + last_error + ")");
}

ScoreDistribution RemoteRewardOracle::alignment_query(
    std::span<const TokenId> candidate, const ActionPlan& reference) {
  nlohmann::json j{
      {"kind", "alignment"},
      {"prompt_id", -1},
      {"candidate", candidate_record(candidate, *vocab_)},
      {"reference", nlohmann::json::parse(plan_to_json(reference, *vocab_))},
  };
  const std::string request_id = content_hash(j.dump());
  j["request_id"] = request_id;
  return post_score(j.dump(), request_id);
}

ScoreDistribution RemoteRewardOracle::creativity_query(
    int prompt_id, std::span<const TokenId> candidate) {
  nlohmann::json j{
      {"kind", "creativity"},
      {"prompt_id", prompt_id},
      {"candidate", candidate_record(candidate, *vocab_)},
  };
  const std::string request_id = content_hash(j.dump());
  j["request_id"] = request_id;
  return post_score(j.dump(), request_id);
}

}  // namespace planedit
