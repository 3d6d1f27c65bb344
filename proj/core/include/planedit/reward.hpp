#pragma once

// Reward engine for plan optimization.
//
// Oracles return full probability distributions over discrete score tokens;
// the engine reduces them to scalars by expectation, normalizes to [0,1], and
// combines format, alignment, and creativity components with configurable
// weights. Keeping the expectation on this side of the oracle boundary makes
// the math auditable regardless of which oracle is plugged in.

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "planedit/errors.hpp"
#include "planedit/grammar.hpp"
#include "planedit/policy.hpp"

namespace planedit {

// Distribution over an ordered set of score tokens with numeric values.
struct ScoreDistribution {
  std::vector<double> values;  // strictly increasing
  std::vector<double> probs;   // non-negative, sums to 1 within 1e-9

  void validate() const;  // throws OracleMalformedError

  static std::vector<double> six_point_values();  // {0,1,2,3,4,5}
  static ScoreDistribution point_mass(int index);
  // exp(-sharpness * |value - center|) over the 0..5 values, normalized.
  static ScoreDistribution peaked_at(double center, double sharpness);
};

// Expected value over score tokens.
double expected_score(const ScoreDistribution& d);

// (raw - min) / (max - min), clamped into [0,1].
double normalize_score(double raw, std::span<const double> values);

struct RewardWeights {
  double format = 0.1;
  double alignment = 0.5;
  double creativity = 0.4;
};

double combine_rewards(int format_reward, double alignment_norm,
                       double creativity_norm, const RewardWeights& w);

struct RewardBreakdown {
  int format = 0;               // binary format reward
  double alignment_norm = 0.0;  // in [0,1]
  double creativity_norm = 0.0; // in [0,1]
  double combined = 0.0;
  // Raw oracle outputs, retained for audit.
  ScoreDistribution alignment_raw;
  ScoreDistribution creativity_raw;
};

class RewardOracle {
 public:
  virtual ~RewardOracle() = default;
  // Semantic consistency of a candidate against the reference plan.
  virtual ScoreDistribution alignment_query(std::span<const TokenId> candidate,
                                            const ActionPlan& reference) = 0;
  // Actionability / aesthetic-gain potential of a candidate for one prompt.
  virtual ScoreDistribution creativity_query(
      int prompt_id, std::span<const TokenId> candidate) = 0;
};

// Per-prompt lexicons the mock creativity judgment is built on.
struct SceneLexicon {
  std::vector<TokenId> actionable;
  std::vector<TokenId> forbidden;  // "new object" tokens; hard-capped
};

// Deterministic stand-in for an MLLM reward model.
//
// Alignment: per-dimension token edit distance against the reference,
// averaged, mapped to a distribution peaked at 5*(1-distance); exact matches
// get a point mass on the top score. Unparseable candidates fall back to a
// flat edit distance over their non-delimiter tokens plus a fixed penalty, so
// invalid plans still receive shaped (but never better) signal.
//
// Creativity: counts distinct actionable-lexicon tokens; any forbidden token
// caps the score at 1 (point mass), encoding the hard constraint against
// introducing new scene content.
class MockRewardOracle : public RewardOracle {
 public:
  MockRewardOracle(const Vocabulary& vocab,
                   std::map<int, SceneLexicon> lexicons,
                   double sharpness = 4.0, double invalid_penalty = 0.15);

  ScoreDistribution alignment_query(std::span<const TokenId> candidate,
                                    const ActionPlan& reference) override;
  ScoreDistribution creativity_query(int prompt_id,
                                     std::span<const TokenId> candidate) override;

 private:
  const Vocabulary* vocab_;
  std::map<int, SceneLexicon> lexicons_;
  double sharpness_;
  double invalid_penalty_;
};

// Normalized [0,1] token edit distance used by the mock alignment oracle.
double plan_alignment_distance(std::span<const TokenId> candidate,
                               const ActionPlan& reference,
                               const Vocabulary& vocab,
                               double invalid_penalty);

size_t levenshtein(std::span<const TokenId> a, std::span<const TokenId> b);

// Scores one rollout: format check, both oracle queries, expectation,
// normalization, weighted combination. The oracles are queried even when the
// format check fails so early training still sees shaped rewards.
RewardBreakdown score_rollout(const Rollout& rollout,
                              const ActionPlan& reference, int prompt_id,
                              RewardOracle& oracle, const RewardWeights& w,
                              const Vocabulary& vocab);

}  // namespace planedit
