#include "planedit/sft.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "planedit/util.hpp"

namespace planedit {

void validate_sft_examples(std::span<const SftExample> examples,
                           const Vocabulary& vocab) {
  for (size_t i = 0; i < examples.size(); ++i) {
    const auto res = parse_action_plan(examples[i].target, vocab);
    if (!res.ok) {
      throw InvalidTargetError("example " + std::to_string(i) +
                               " target is not a valid plan: " +
                               res.error.message());
    }
  }
}

double sft_loss(const PolicyParams& params,
                std::span<const SftExample> batch) {
  double total = 0.0;
  for (const auto& ex : batch) {
    total -= sequence_logprob(params, ex.prompt_id, ex.target);
  }
  return total / static_cast<double>(batch.size());
}

PolicyParams sft_step(const PolicyParams& params,
                      std::span<const SftExample> batch, double lr) {
  if (lr == 0.0) return params;
  std::vector<double> grad(params.table_size(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) {
    // d loss / d logits = -scale * d logprob / d logits
    accumulate_logprob_gradient(params, ex.prompt_id, ex.target, -scale, grad);
  }
  PolicyParams next = params;
  for (size_t i = 0; i < grad.size(); ++i) next.logits[i] -= lr * grad[i];
  return next;
}

SftTrainer::SftTrainer(PolicyParams params, SftConfig config,
                       const Vocabulary& vocab)
    : params_(std::move(params)), cfg_(config), vocab_(&vocab) {}

std::vector<SftMetricsRow> SftTrainer::train(
    std::span<const SftExample> dataset) {
  validate_sft_examples(dataset, *vocab_);

  std::set<int> prompt_set;
  size_t longest = 0;
  for (const auto& ex : dataset) {
    prompt_set.insert(ex.prompt_id);
    longest = std::max(longest, ex.target.size());
  }
  const std::vector<int> prompts(prompt_set.begin(), prompt_set.end());
  const int decode_len = static_cast<int>(longest) + kNumDelimiterTokens;

  std::vector<size_t> order(dataset.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng shuffle_rng(mix_seed(cfg_.seed, fnv1a64("sft-epoch-order")));

  std::vector<SftMetricsRow> metrics;
  double lr = cfg_.lr;
  size_t cursor = order.size();  // forces a shuffle on first use

  std::vector<SftExample> batch;
  for (int step = 0; step < cfg_.steps; ++step) {
    batch.clear();
    const size_t bs =
        std::min<size_t>(static_cast<size_t>(cfg_.batch_size), dataset.size());
    for (size_t k = 0; k < bs; ++k) {
      if (cursor == order.size()) {
        shuffle_in_place(order, shuffle_rng);
        cursor = 0;
      }
      batch.push_back(dataset[order[cursor++]]);
    }

    const double before = sft_loss(params_, batch);
    PolicyParams next = sft_step(params_, batch, lr);
    if (cfg_.backtracking) {
      for (int h = 0; h < cfg_.max_backtracks; ++h) {
        if (sft_loss(next, batch) <= before) break;
        lr *= 0.5;
        next = sft_step(params_, batch, lr);
      }
    }
    params_ = std::move(next);
    if (!params_.finite()) {
      throw std::logic_error("sft update produced non-finite parameters");
    }

    if (step % cfg_.metrics_every == 0 || step + 1 == cfg_.steps) {
      metrics.push_back({step, sft_loss(params_, dataset),
                         greedy_format_validity(prompts, decode_len), lr});
    }
  }
  return metrics;
}

double SftTrainer::greedy_format_validity(std::span<const int> prompts,
                                          int max_len) const {
  if (prompts.empty()) return 0.0;
  int valid = 0;
  for (int prompt : prompts) {
    const auto tokens =
        greedy_decode(params_, prompt, max_len, Vocabulary::end_token());
    valid += format_reward(tokens, *vocab_);
  }
  return static_cast<double>(valid) / static_cast<double>(prompts.size());
}

}  // namespace planedit
