#pragma once

// Cold-start supervised fine-tuning: plain gradient descent on the mean
// negative log-likelihood of ground-truth action sequences, with optional
// backtracking (halve the step on any loss increase and retry).

#include <span>
#include <vector>

#include "planedit/grammar.hpp"
#include "planedit/policy.hpp"

namespace planedit {

struct SftExample {
  int prompt_id = 0;
  std::vector<TokenId> target;  // must parse as a valid plan
};

struct SftConfig {
  double lr = 0.5;
  int steps = 2000;
  int batch_size = 8;
  uint64_t seed = 1;
  bool backtracking = true;
  int max_backtracks = 30;
  int metrics_every = 25;
};

// Throws InvalidTargetError naming the first offending example.
void validate_sft_examples(std::span<const SftExample> examples,
                           const Vocabulary& vocab);

// Mean over examples of -sequence_logprob(target).
double sft_loss(const PolicyParams& params, std::span<const SftExample> batch);

// One plain gradient step at the given learning rate.
PolicyParams sft_step(const PolicyParams& params,
                      std::span<const SftExample> batch, double lr);

struct SftMetricsRow {
  int step = 0;
  double loss = 0.0;
  double format_validity = 0.0;  // over greedy decodes of the dataset prompts
  double lr = 0.0;
};

// Loss per batch is averaged per example, then over the batch; the metrics
// CSV header restates this convention.
class SftTrainer {
 public:
  SftTrainer(PolicyParams params, SftConfig config, const Vocabulary& vocab);

  // Epoch order is a fixed seeded shuffle; returns the metrics trajectory.
  std::vector<SftMetricsRow> train(std::span<const SftExample> dataset);

  const PolicyParams& params() const { return params_; }
  double greedy_format_validity(std::span<const int> prompts, int max_len) const;

 private:
  PolicyParams params_;
  SftConfig cfg_;
  const Vocabulary* vocab_;
};

}  // namespace planedit
