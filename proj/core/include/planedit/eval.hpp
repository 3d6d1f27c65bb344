#pragma once

// Evaluation: two-stage inference (plan, then conditioned ODE edit), pairwise
// win rates against poor and good references under a judge oracle, mock
// aesthetic scorers, and bootstrap confidence intervals.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "planedit/corpus.hpp"
#include "planedit/flow.hpp"
#include "planedit/policy.hpp"
#include "planedit/reward.hpp"

namespace planedit {

enum class Verdict { kCandidate, kReference };

class JudgeOracle {
 public:
  virtual ~JudgeOracle() = default;
  virtual Verdict compare(const LatentVec& candidate,
                          const LatentVec& reference, int prompt) = 0;
  virtual ScoreDistribution score(const LatentVec& candidate, int prompt) = 0;
  virtual std::string name() const = 0;
};

// Judges "more aesthetic" as "closer to the prompt's planted good latent".
// Ties go to the reference, the harder rule for the method under test.
// Scoring maps distance to a peaked distribution centered at 5*exp(-scale*d).
class MockDistanceJudge : public JudgeOracle {
 public:
  MockDistanceJudge(std::string name, std::map<int, LatentVec> targets,
                    double score_scale = 0.7, double sharpness = 4.0);

  Verdict compare(const LatentVec& candidate, const LatentVec& reference,
                  int prompt) override;
  ScoreDistribution score(const LatentVec& candidate, int prompt) override;
  std::string name() const override { return name_; }

 private:
  double distance_to_target(const LatentVec& v, int prompt) const;

  std::string name_;
  std::map<int, LatentVec> targets_;
  double score_scale_;
  double sharpness_;
};

// The three standard scorer slots, with different transfer curves.
std::vector<std::unique_ptr<JudgeOracle>> make_mock_scorers(
    const std::map<int, LatentVec>& targets);

struct InferenceResult {
  std::vector<TokenId> plan_tokens;
  bool format_valid = false;  // invalid plans still get edited, flagged
  LatentVec latent;
};

// Greedy-decode a plan, featurize it (raw-token fallback when invalid), and
// Euler-sample the editor conditioned on it.
InferenceResult run_inference(const PolicyParams& policy,
                              const VelocityNet& net,
                              const PlanEncoder& encoder,
                              const Vocabulary& vocab, int prompt, int max_len,
                              int ode_steps, uint64_t seed);

// Fraction of comparisons the judge awards to the output.
double pairwise_win_rate(std::span<const LatentVec> outputs,
                         std::span<const LatentVec> references,
                         std::span<const int> prompts, JudgeOracle& judge);

struct ScoreSummary {
  bool empty = true;
  std::vector<std::pair<std::string, double>> means;  // per scorer, in [0,1]
};

ScoreSummary aggregate_scores(std::span<const LatentVec> outputs,
                              std::span<const int> prompts,
                              std::span<JudgeOracle* const> scorers);

struct BootstrapCi {
  double lo = 0.0;
  double hi = 0.0;
};

// Seeded percentile bootstrap over per-sample win flags.
BootstrapCi bootstrap_win_rate_ci(std::span<const int> wins, int resamples,
                                  uint64_t seed);

struct EvalReport {
  size_t sample_count = 0;
  bool empty = true;
  double win_rate_vs_poor = 0.0;
  double win_rate_vs_good = 0.0;
  BootstrapCi ci_vs_poor, ci_vs_good;
  double format_valid_rate = 0.0;
  ScoreSummary scores;
  // Populated from an external study CSV when one is supplied.
  std::optional<double> human_win_vs_poor;
  std::optional<double> human_win_vs_good;
};

std::string eval_report_to_json(const EvalReport& report,
                                uint64_t config_hash);

struct EvalConfig {
  int max_len = 40;
  int ode_steps = 50;
  uint64_t seed = 1;
  int max_samples = 200;  // 0 = all pairs
  int bootstrap_resamples = 1000;
  int parallelism = 1;
  bool shuffle_plans = false;  // ablation: permute dimensions before editing
};

EvalReport evaluate_pairs(const PolicyParams& policy, const VelocityNet& net,
                          const PlanEncoder& encoder, const Vocabulary& vocab,
                          std::span<const PairRecord> pairs,
                          JudgeOracle& judge,
                          std::span<JudgeOracle* const> scorers,
                          const EvalConfig& cfg);

}  // namespace planedit
