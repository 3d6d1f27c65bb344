#include "planedit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "planedit/util.hpp"

namespace planedit {

MockDistanceJudge::MockDistanceJudge(std::string name,
                                     std::map<int, LatentVec> targets,
                                     double score_scale, double sharpness)
    : name_(std::move(name)),
      targets_(std::move(targets)),
      score_scale_(score_scale),
      sharpness_(sharpness) {}

double MockDistanceJudge::distance_to_target(const LatentVec& v,
                                             int prompt) const {
  const auto it = targets_.find(prompt);
  if (it == targets_.end()) {
    throw ConfigError("judge has no target latent for prompt " +
                      std::to_string(prompt));
  }
  const LatentVec& t = it->second;
  if (t.size() != v.size()) {
    throw DimensionMismatchError("judge target dimension differs");
  }
  double acc = 0.0;
  for (size_t i = 0; i < v.size(); ++i) acc += (v[i] - t[i]) * (v[i] - t[i]);
  return std::sqrt(acc);
}

Verdict MockDistanceJudge::compare(const LatentVec& candidate,
                                   const LatentVec& reference, int prompt) {
  const double dc = distance_to_target(candidate, prompt);
  const double dr = distance_to_target(reference, prompt);
  return dc < dr ? Verdict::kCandidate : Verdict::kReference;
}

ScoreDistribution MockDistanceJudge::score(const LatentVec& candidate,
                                           int prompt) {
  const double d = distance_to_target(candidate, prompt);
  return ScoreDistribution::peaked_at(5.0 * std::exp(-score_scale_ * d),
                                      sharpness_);
}

std::vector<std::unique_ptr<JudgeOracle>> make_mock_scorers(
    const std::map<int, LatentVec>& targets) {
  std::vector<std::unique_ptr<JudgeOracle>> out;
  out.push_back(
      std::make_unique<MockDistanceJudge>("scorer-sharp", targets, 1.0, 8.0));
  out.push_back(std::make_unique<MockDistanceJudge>("scorer-balanced", targets,
                                                    0.7, 4.0));
  out.push_back(std::make_unique<MockDistanceJudge>("scorer-lenient", targets,
                                                    0.4, 2.0));
  return out;
}

InferenceResult run_inference(const PolicyParams& policy,
                              const VelocityNet& net,
                              const PlanEncoder& encoder,
                              const Vocabulary& vocab, int prompt, int max_len,
                              int ode_steps, uint64_t seed) {
  InferenceResult out;
  out.plan_tokens =
      greedy_decode(policy, prompt, max_len, Vocabulary::end_token());
  out.format_valid = format_reward(out.plan_tokens, vocab) == 1;
  const LatentVec h = encoder.encode(prompt, out.plan_tokens, vocab);
  Rng rng(mix_seed(seed, fnv1a64("inference-ode")));
  out.latent = sample_ode(net, h, ode_steps, rng);
  return out;
}

double pairwise_win_rate(std::span<const LatentVec> outputs,
                         std::span<const LatentVec> references,
                         std::span<const int> prompts, JudgeOracle& judge) {
  if (outputs.size() != references.size() ||
      outputs.size() != prompts.size()) {
    throw LengthMismatchError("win rate inputs have different lengths");
  }
  if (outputs.empty()) return 0.0;
  size_t wins = 0;
  for (size_t i = 0; i < outputs.size(); ++i) {
    wins += judge.compare(outputs[i], references[i], prompts[i]) ==
            Verdict::kCandidate;
  }
  return static_cast<double>(wins) / static_cast<double>(outputs.size());
}

ScoreSummary aggregate_scores(std::span<const LatentVec> outputs,
                              std::span<const int> prompts,
                              std::span<JudgeOracle* const> scorers) {
  ScoreSummary out;
  for (JudgeOracle* scorer : scorers) out.means.emplace_back(scorer->name(), 0.0);
  if (outputs.empty()) return out;  // marked empty, no NaN
  out.empty = false;
  for (size_t s = 0; s < scorers.size(); ++s) {
    double acc = 0.0;
    for (size_t i = 0; i < outputs.size(); ++i) {
      const ScoreDistribution d = scorers[s]->score(outputs[i], prompts[i]);
      acc += normalize_score(expected_score(d), d.values);
    }
    out.means[s].second = acc / static_cast<double>(outputs.size());
  }
  return out;
}

BootstrapCi bootstrap_win_rate_ci(std::span<const int> wins, int resamples,
                                  uint64_t seed) {
  BootstrapCi ci;
  if (wins.empty() || resamples <= 0) return ci;
  Rng rng(mix_seed(seed, fnv1a64("bootstrap-ci")));
  std::vector<double> rates(resamples);
  for (int b = 0; b < resamples; ++b) {
    size_t acc = 0;
    for (size_t i = 0; i < wins.size(); ++i) {
      acc += wins[uniform_index(rng, wins.size())];
    }
    rates[b] = static_cast<double>(acc) / static_cast<double>(wins.size());
  }
  std::sort(rates.begin(), rates.end());
  const auto at = [&rates](double q) {
    const size_t idx = static_cast<size_t>(
        std::min<double>(q * (rates.size() - 1), rates.size() - 1));
    return rates[idx];
  };
  ci.lo = at(0.025);
  ci.hi = at(0.975);
  return ci;
}

std::string eval_report_to_json(const EvalReport& r, uint64_t config_hash) {
  nlohmann::json scores = nlohmann::json::array();
  for (const auto& [name, mean] : r.scores.means) {
    scores.push_back({{"scorer", name}, {"mean", mean}});
  }
  nlohmann::json j{
      {"sample_count", r.sample_count},
      {"empty", r.empty},
      {"win_rate_vs_poor", r.win_rate_vs_poor},
      {"win_rate_vs_good", r.win_rate_vs_good},
      {"ci_vs_poor", {{"lo", r.ci_vs_poor.lo}, {"hi", r.ci_vs_poor.hi}}},
      {"ci_vs_good", {{"lo", r.ci_vs_good.lo}, {"hi", r.ci_vs_good.hi}}},
      {"format_valid_rate", r.format_valid_rate},
      {"scores", scores},
      {"config_hash", config_hash},
  };
  if (r.human_win_vs_poor) j["human_win_vs_poor"] = *r.human_win_vs_poor;
  if (r.human_win_vs_good) j["human_win_vs_good"] = *r.human_win_vs_good;
  return j.dump(2);
}

EvalReport evaluate_pairs(const PolicyParams& policy, const VelocityNet& net,
                          const PlanEncoder& encoder, const Vocabulary& vocab,
                          std::span<const PairRecord> pairs,
                          JudgeOracle& judge,
                          std::span<JudgeOracle* const> scorers,
                          const EvalConfig& cfg) {
  EvalReport report;
  const size_t n = cfg.max_samples > 0
                       ? std::min<size_t>(cfg.max_samples, pairs.size())
                       : pairs.size();
  report.sample_count = n;
  if (n == 0) return report;
  report.empty = false;

  std::vector<LatentVec> outputs(n);
  std::vector<int> prompts(n);
  std::vector<int> valid(n, 0);

  parallel_for(n, cfg.parallelism, [&](size_t i) {
    const PairRecord& pair = pairs[i];
    prompts[i] = pair.prompt_id;
    InferenceResult inf =
        run_inference(policy, net, encoder, vocab, pair.prompt_id, cfg.max_len,
                      cfg.ode_steps, mix_seed(cfg.seed, i));
    valid[i] = inf.format_valid ? 1 : 0;
    if (cfg.shuffle_plans && inf.format_valid) {
      // Ablation: same segments, permuted order, re-featurized and re-edited.
      const ActionPlan plan =
          parse_action_plan(inf.plan_tokens, vocab).plan;
      const auto shuffled = shuffle_dimensions(plan, mix_seed(cfg.seed, i));
      const LatentVec h = encoder.encode(pair.prompt_id, shuffled, vocab);
      // Same noise stream as the ordered edit; only the conditioning moves.
      Rng rng(mix_seed(mix_seed(cfg.seed, i), fnv1a64("inference-ode")));
      inf.latent = sample_ode(net, h, cfg.ode_steps, rng);
    }
    outputs[i] = std::move(inf.latent);
  });

  std::vector<int> wins_poor(n), wins_good(n);
  for (size_t i = 0; i < n; ++i) {
    const PairRecord& pair = pairs[i];
    wins_poor[i] = judge.compare(outputs[i], pair.poor.features,
                                 pair.prompt_id) == Verdict::kCandidate;
    wins_good[i] = judge.compare(outputs[i], pair.good.features,
                                 pair.prompt_id) == Verdict::kCandidate;
    report.format_valid_rate += valid[i];
  }
  report.format_valid_rate /= static_cast<double>(n);
  const auto rate = [n](const std::vector<int>& wins) {
    size_t acc = 0;
    for (int w : wins) acc += w;
    return static_cast<double>(acc) / static_cast<double>(n);
  };
  report.win_rate_vs_poor = rate(wins_poor);
  report.win_rate_vs_good = rate(wins_good);
  report.ci_vs_poor = bootstrap_win_rate_ci(wins_poor, cfg.bootstrap_resamples,
                                            mix_seed(cfg.seed, 11));
  report.ci_vs_good = bootstrap_win_rate_ci(wins_good, cfg.bootstrap_resamples,
                                            mix_seed(cfg.seed, 13));
  report.scores = aggregate_scores(outputs, prompts, scorers);
  return report;
}

}  // namespace planedit
