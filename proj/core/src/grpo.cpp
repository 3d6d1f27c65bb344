#include "planedit/grpo.hpp"

#include <algorithm>
#include <cmath>

#include "planedit/util.hpp"

namespace planedit {

AdvantageSet compute_advantages(std::span<const double> rewards,
                                double std_epsilon) {
  if (rewards.size() < 2) {
    throw GroupTooSmallError("advantage needs a group of at least 2");
  }
  AdvantageSet out;
  out.reward_mean = mean_of(rewards);
  out.reward_std = population_std(rewards);
  out.degenerate = out.reward_std <= std_epsilon;
  const double denom = std::max(out.reward_std, std_epsilon);
  out.advantage.resize(rewards.size());
  for (size_t i = 0; i < rewards.size(); ++i) {
    out.advantage[i] = (rewards[i] - out.reward_mean) / denom;
  }
  return out;
}

double grpo_objective(const SampledGroup& group,
                      const AdvantageSet& advantages,
                      const PolicyParams& params, const PolicyParams& ref,
                      double beta) {
  double total = 0.0;
  size_t tokens = 0;
  std::vector<TokenId> ctx;
  for (size_t i = 0; i < group.rollouts.size(); ++i) {
    const Rollout& r = group.rollouts[i];
    ctx.clear();
    for (TokenId tok : r.tokens) {
      const double kl =
          beta != 0.0 ? exact_kl(params, ref, group.prompt_id, ctx) : 0.0;
      total += advantages.advantage[i] - beta * kl;
      ctx.push_back(tok);
      ++tokens;
    }
  }
  return tokens == 0 ? 0.0 : total / static_cast<double>(tokens);
}

GrpoTrainer::GrpoTrainer(PolicyParams params, PolicyParams ref, GrpoTask task,
                         RewardOracle& oracle, RewardWeights weights,
                         const Vocabulary& vocab, GrpoConfig config)
    : params_(std::move(params)),
      ref_(std::move(ref)),
      task_(std::move(task)),
      oracle_(&oracle),
      weights_(weights),
      vocab_(&vocab),
      cfg_(config) {
  if (cfg_.group_size < 2) {
    throw GroupTooSmallError("grpo group_size must be >= 2");
  }
  schedule_ = task_.prompt_ids;
  Rng rng(mix_seed(cfg_.seed, fnv1a64("grpo-prompt-schedule")));
  shuffle_in_place(schedule_, rng);
}

StepReport GrpoTrainer::step() {
  const int step = step_index_;
  const int prompt = schedule_[step % schedule_.size()];
  const ActionPlan& reference = task_.references.at(prompt);

  SampleOptions opts;
  opts.max_len = cfg_.max_len;
  opts.end_token = Vocabulary::end_token();
  opts.parallelism = cfg_.parallelism;
  const SampledGroup group =
      sample_group(params_, prompt, cfg_.group_size,
                   mix_seed(cfg_.seed, fnv1a64("grpo-group"), step), opts);

  if (cfg_.check_on_policy) {
    for (const Rollout& r : group.rollouts) {
      const double recomputed = sequence_logprob(params_, prompt, r.tokens);
      if (std::abs(recomputed - r.total_logprob()) > 1e-9) {
        throw std::logic_error("stale rollout: recorded logprob diverges");
      }
    }
  }

  // Score before touching parameters so an oracle failure skips the whole
  // update instead of half-applying it.
  std::vector<RewardBreakdown> scores(group.rollouts.size());
  parallel_for(group.rollouts.size(), cfg_.parallelism, [&](size_t i) {
    scores[i] = score_rollout(group.rollouts[i], reference, prompt, *oracle_,
                              weights_, *vocab_);
  });

  std::vector<double> rewards(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) rewards[i] = scores[i].combined;
  const AdvantageSet adv = compute_advantages(rewards, cfg_.std_epsilon);

  size_t total_tokens = 0;
  for (const Rollout& r : group.rollouts) total_tokens += r.tokens.size();

  StepReport report;
  report.step = step;
  report.prompt_id = prompt;
  report.mean_reward = adv.reward_mean;
  for (const auto& s : scores) {
    report.format_rate += s.format;
    report.mean_alignment += s.alignment_norm;
    report.mean_creativity += s.creativity_norm;
  }
  report.format_rate /= static_cast<double>(scores.size());
  report.mean_alignment /= static_cast<double>(scores.size());
  report.mean_creativity /= static_cast<double>(scores.size());

  if (total_tokens > 0) {
    const double token_scale = 1.0 / static_cast<double>(total_tokens);
    std::vector<double> grad(params_.table_size(), 0.0);
    std::vector<TokenId> ctx;
    double kl_sum = 0.0;
    for (size_t i = 0; i < group.rollouts.size(); ++i) {
      const Rollout& r = group.rollouts[i];
      // Sequence-level advantage broadcast over tokens.
      accumulate_logprob_gradient(params_, prompt, r.tokens,
                                  adv.advantage[i] * token_scale, grad);
      ctx.clear();
      for (TokenId tok : r.tokens) {
        kl_sum += exact_kl(params_, ref_, prompt, ctx);
        if (cfg_.beta != 0.0) {
          accumulate_kl_gradient(params_, ref_, prompt, ctx,
                                 -cfg_.beta * token_scale, grad);
        }
        ctx.push_back(tok);
      }
    }
    report.mean_kl = kl_sum / static_cast<double>(total_tokens);
    report.objective =
        grpo_objective(group, adv, params_, ref_, cfg_.beta);

    for (size_t i = 0; i < grad.size(); ++i) {
      params_.logits[i] += cfg_.lr * grad[i];  // ascent
    }
    if (!params_.finite()) {
      throw std::logic_error("grpo update produced non-finite parameters");
    }
  }

  ++step_index_;
  return report;
}

std::vector<StepReport> GrpoTrainer::run() {
  std::vector<StepReport> reports;
  reports.reserve(cfg_.steps);
  for (int s = 0; s < cfg_.steps; ++s) reports.push_back(step());
  return reports;
}

}  // namespace planedit
