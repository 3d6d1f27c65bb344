#pragma once

// Fully on-policy group-relative policy optimization.
//
// Each step samples a fresh group from the current policy, scores it, forms
// group-standardized advantages, and ascends the token-averaged objective
//   (1 / sum_i |a_i|) * sum_i sum_j (A_i - beta * KL_j)
// where KL_j is the exact categorical KL against a frozen reference policy at
// token j's decoding context. Every group is used for exactly one update; no
// importance ratios, no clipping, no critics.

#include <map>
#include <vector>

#include "planedit/grammar.hpp"
#include "planedit/policy.hpp"
#include "planedit/reward.hpp"

namespace planedit {

struct GrpoConfig {
  int group_size = 8;       // N >= 2
  double beta = 0.04;       // KL coefficient
  double lr = 0.8;
  int steps = 500;
  double std_epsilon = 1e-6;
  uint64_t seed = 1;
  int max_len = 40;
  int parallelism = 1;
  bool check_on_policy = true;  // recompute rollout logprobs before updating
};

struct AdvantageSet {
  std::vector<double> advantage;  // per rollout; broadcast over its tokens
  double reward_mean = 0.0;
  double reward_std = 0.0;  // population std
  bool degenerate = false;  // all rewards equal within std_epsilon
};

// A_i = (r_i - mean) / max(std, std_epsilon), population std.
AdvantageSet compute_advantages(std::span<const double> rewards,
                                double std_epsilon);

// Monitoring value of the objective for an already-scored group.
double grpo_objective(const SampledGroup& group, const AdvantageSet& advantages,
                      const PolicyParams& params, const PolicyParams& ref,
                      double beta);

struct StepReport {
  int step = 0;
  int prompt_id = 0;
  double mean_reward = 0.0;
  double format_rate = 0.0;
  double mean_alignment = 0.0;
  double mean_creativity = 0.0;
  double mean_kl = 0.0;  // token-averaged exact step KL
  double objective = 0.0;
};

// One prompt the trainer can draw: its id and the gold plan rewards are
// judged against.
struct GrpoTask {
  std::vector<int> prompt_ids;
  std::map<int, ActionPlan> references;
};

class GrpoTrainer {
 public:
  // `ref` is frozen for the whole run (normally the SFT checkpoint).
  GrpoTrainer(PolicyParams params, PolicyParams ref, GrpoTask task,
              RewardOracle& oracle, RewardWeights weights,
              const Vocabulary& vocab, GrpoConfig config);

  // One sample/score/update iteration. If the oracle fails after retries the
  // step throws and the parameters are left untouched.
  StepReport step();
  std::vector<StepReport> run();  // cfg.steps iterations

  const PolicyParams& params() const { return params_; }
  const PolicyParams& reference() const { return ref_; }

 private:
  PolicyParams params_;
  PolicyParams ref_;
  GrpoTask task_;
  RewardOracle* oracle_;
  RewardWeights weights_;
  const Vocabulary* vocab_;
  GrpoConfig cfg_;
  std::vector<int> schedule_;  // seeded round-robin order over prompts
  int step_index_ = 0;
};

}  // namespace planedit
