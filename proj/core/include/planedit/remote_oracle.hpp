#pragma once

// HTTP reward oracle client.
//
// Wire protocol, POST <endpoint>/score:
//   request  {"request_id": "...", "kind": "alignment"|"creativity",
//             "prompt_id": int, "candidate": {"tokens":[...]},
//             "reference": {"segments":[...]}}        (alignment only)
//   response {"request_id": "...", "score_probs": {"0": p0, ..., "5": p5}}
//
// Request ids are a content hash, so retries are idempotent by construction.
// Transport failures retry with bounded exponential backoff and then raise
// OracleUnavailableError; responses that violate the distribution invariants
// raise OracleMalformedError.

#include <string>

#include "planedit/reward.hpp"

namespace planedit {

struct RemoteOracleConfig {
  std::string endpoint;  // e.g. "http://127.0.0.1:8402"
  int timeout_ms = 2000;
  int max_retries = 3;
  int initial_backoff_ms = 100;  // doubles per retry, capped at 2s
};

class RemoteRewardOracle : public RewardOracle {
 public:
  RemoteRewardOracle(RemoteOracleConfig config, const Vocabulary& vocab);

  ScoreDistribution alignment_query(std::span<const TokenId> candidate,
                                    const ActionPlan& reference) override;
  ScoreDistribution creativity_query(int prompt_id,
                                     std::span<const TokenId> candidate) override;

 private:
  ScoreDistribution post_score(const std::string& body,
                               const std::string& request_id);

  RemoteOracleConfig config_;
  const Vocabulary* vocab_;
};

}  // namespace planedit
