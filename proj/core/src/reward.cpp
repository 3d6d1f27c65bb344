#include "planedit/reward.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace planedit {

void ScoreDistribution::validate() const {
  if (values.empty() || values.size() != probs.size()) {
    throw OracleMalformedError("score distribution has mismatched sizes");
  }
  double sum = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || !std::isfinite(probs[i]) || probs[i] < 0) {
      throw OracleMalformedError("score distribution has invalid entries");
    }
    if (i > 0 && values[i] <= values[i - 1]) {
      throw OracleMalformedError("score values must be strictly increasing");
    }
    sum += probs[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw OracleMalformedError("score probabilities sum to " +
                               std::to_string(sum));
  }
}

std::vector<double> ScoreDistribution::six_point_values() {
  return {0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
}

ScoreDistribution ScoreDistribution::point_mass(int index) {
  ScoreDistribution d;
  d.values = six_point_values();
  d.probs.assign(d.values.size(), 0.0);
  d.probs[index] = 1.0;
  return d;
}

ScoreDistribution ScoreDistribution::peaked_at(double center,
                                               double sharpness) {
  ScoreDistribution d;
  d.values = six_point_values();
  d.probs.resize(d.values.size());
  double z = 0.0;
  for (size_t i = 0; i < d.values.size(); ++i) {
    d.probs[i] = std::exp(-sharpness * std::abs(d.values[i] - center));
    z += d.probs[i];
  }
  for (double& p : d.probs) p /= z;
  return d;
}

double expected_score(const ScoreDistribution& d) {
  double e = 0.0;
  for (size_t i = 0; i < d.values.size(); ++i) e += d.values[i] * d.probs[i];
  return e;
}

double normalize_score(double raw, std::span<const double> values) {
  const double lo = values.front();
  const double hi = values.back();
  if (!(lo < hi)) {
    throw DegenerateRangeError("score range is degenerate");
  }
  const double x = (raw - lo) / (hi - lo);
  return std::clamp(x, 0.0, 1.0);
}

double combine_rewards(int format_reward, double alignment_norm,
                       double creativity_norm, const RewardWeights& w) {
  return w.format * format_reward + w.alignment * alignment_norm +
         w.creativity * creativity_norm;
}

size_t levenshtein(std::span<const TokenId> a, std::span<const TokenId> b) {
  const size_t n = a.size(), m = b.size();
  if (n == 0) return m;
  if (m == 0) return n;
  std::vector<size_t> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = j;
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= m; ++j) {
      const size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

namespace {

double normalized_distance(std::span<const TokenId> a,
                           std::span<const TokenId> b) {
  const size_t denom = std::max(a.size(), b.size());
  if (denom == 0) return 0.0;
  return static_cast<double>(levenshtein(a, b)) / static_cast<double>(denom);
}

std::vector<TokenId> strip_delimiters(std::span<const TokenId> tokens) {
  std::vector<TokenId> out;
  out.reserve(tokens.size());
  for (TokenId t : tokens) {
    if (!Vocabulary::is_delimiter(t)) out.push_back(t);
  }
  return out;
}

}  // namespace

double plan_alignment_distance(std::span<const TokenId> candidate,
                               const ActionPlan& reference,
                               const Vocabulary& vocab,
                               double invalid_penalty) {
  const ParseResult parsed = parse_action_plan(candidate, vocab);
  if (parsed.ok) {
    double acc = 0.0;
    for (int dim = 1; dim <= kNumDimensions; ++dim) {
      acc += normalized_distance(parsed.plan.segment(dim),
                                 reference.segment(dim));
    }
    return acc / kNumDimensions;
  }
  // Unparseable: flat distance over content tokens, penalized so a broken
  // plan never outscores its parseable twin.
  const std::vector<TokenId> flat = strip_delimiters(candidate);
  const std::vector<TokenId> ref_flat = reference.flat_content();
  return std::min(1.0, normalized_distance(flat, ref_flat) + invalid_penalty);
}

MockRewardOracle::MockRewardOracle(const Vocabulary& vocab,
                                   std::map<int, SceneLexicon> lexicons,
                                   double sharpness, double invalid_penalty)
    : vocab_(&vocab),
      lexicons_(std::move(lexicons)),
      sharpness_(sharpness),
      invalid_penalty_(invalid_penalty) {}

ScoreDistribution MockRewardOracle::alignment_query(
    std::span<const TokenId> candidate, const ActionPlan& reference) {
  const double dist =
      plan_alignment_distance(candidate, reference, *vocab_, invalid_penalty_);
  if (dist == 0.0) return ScoreDistribution::point_mass(5);
  return ScoreDistribution::peaked_at(5.0 * (1.0 - dist), sharpness_);
}

ScoreDistribution MockRewardOracle::creativity_query(
    int prompt_id, std::span<const TokenId> candidate) {
  const auto it = lexicons_.find(prompt_id);
  if (it == lexicons_.end()) {
    throw OracleMalformedError("no scene lexicon for prompt " +
                               std::to_string(prompt_id));
  }
  const SceneLexicon& lex = it->second;
  const std::vector<TokenId> content = strip_delimiters(candidate);
  const std::set<TokenId> present(content.begin(), content.end());

  // Hard constraint first: any "new object" token caps the score at 1.
  for (TokenId t : lex.forbidden) {
    if (present.count(t)) return ScoreDistribution::point_mass(1);
  }

  double f1 = 0.6;  // neutral when no lexicon is configured
  if (!lex.actionable.empty()) {
    size_t hits = 0;
    for (TokenId t : lex.actionable) hits += present.count(t);
    // Coverage of the actionable lexicon, balanced against off-lexicon
    // chatter: padding a plan with junk is not "actionable", and rewarding
    // raw coverage alone lets long gibberish outscore a concise plan.
    const double recall =
        static_cast<double>(hits) / static_cast<double>(lex.actionable.size());
    size_t on_lexicon = 0;
    const std::set<TokenId> lexicon(lex.actionable.begin(),
                                    lex.actionable.end());
    for (TokenId t : content) on_lexicon += lexicon.count(t);
    const double precision =
        content.empty() ? 0.0
                        : static_cast<double>(on_lexicon) /
                              static_cast<double>(content.size());
    f1 = (recall + precision) > 0.0
             ? 2.0 * recall * precision / (recall + precision)
             : 0.0;
  }
  if (f1 >= 1.0) return ScoreDistribution::point_mass(5);
  // Continuous center so every step toward the lexicon moves the
  // expectation; an integer-rounded score starves the policy of gradient.
  return ScoreDistribution::peaked_at(5.0 * f1, sharpness_);
}

RewardBreakdown score_rollout(const Rollout& rollout,
                              const ActionPlan& reference, int prompt_id,
                              RewardOracle& oracle, const RewardWeights& w,
                              const Vocabulary& vocab) {
  RewardBreakdown b;
  b.format = format_reward(rollout.tokens, vocab);

  b.alignment_raw = oracle.alignment_query(rollout.tokens, reference);
  b.alignment_raw.validate();
  b.alignment_norm =
      normalize_score(expected_score(b.alignment_raw), b.alignment_raw.values);

  b.creativity_raw = oracle.creativity_query(prompt_id, rollout.tokens);
  b.creativity_raw.validate();
  b.creativity_norm = normalize_score(expected_score(b.creativity_raw),
                                      b.creativity_raw.values);

  b.combined = combine_rewards(b.format, b.alignment_norm, b.creativity_norm, w);
  return b;
}

}  // namespace planedit
