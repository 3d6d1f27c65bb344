#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "planedit/corpus.hpp"
#include "planedit/reward.hpp"

using namespace planedit;

namespace {

ScoreDistribution uniform_scores() {
  ScoreDistribution d;
  d.values = ScoreDistribution::six_point_values();
  d.probs.assign(6, 1.0 / 6.0);
  return d;
}

}  // namespace

TEST_CASE("expected score: uniform, point mass, split mass") {
  CHECK(expected_score(uniform_scores()) == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(expected_score(ScoreDistribution::point_mass(5)) == 5.0);
  ScoreDistribution split;
  split.values = ScoreDistribution::six_point_values();
  split.probs = {0.5, 0, 0, 0, 0, 0.5};
  CHECK(expected_score(split) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("normalization hits both endpoints and the midpoint") {
  const auto values = ScoreDistribution::six_point_values();
  CHECK(normalize_score(5.0, values) == 1.0);
  CHECK(normalize_score(2.5, values) == 0.5);
  CHECK(normalize_score(0.0, values) == 0.0);
  const std::vector<double> degenerate{3.0, 3.0};
  CHECK_THROWS_AS((void)normalize_score(3.0, degenerate),
                  DegenerateRangeError);
}

TEST_CASE("weighted combination reproduces the worked example") {
  const RewardWeights w;  // 0.1 / 0.5 / 0.4
  CHECK(std::abs(combine_rewards(1, 0.8, 0.5, w) - 0.7) <= 1e-15);
  CHECK(combine_rewards(0, 0.0, 0.0, w) == 0.0);
  CHECK(std::abs(combine_rewards(1, 1.0, 1.0, w) - 1.0) <= 1e-15);
}

TEST_CASE("shifting mass upward never lowers the expectation") {
  Rng rng(314);
  for (int i = 0; i < 200; ++i) {
    ScoreDistribution d;
    d.values = ScoreDistribution::six_point_values();
    d.probs.resize(6);
    double z = 0.0;
    for (double& p : d.probs) {
      p = uniform01(rng) + 1e-3;
      z += p;
    }
    for (double& p : d.probs) p /= z;

    const size_t lo = uniform_index(rng, 5);
    const size_t hi = lo + 1 + uniform_index(rng, 5 - lo);
    const double eps = 0.5 * d.probs[lo];
    ScoreDistribution shifted = d;
    shifted.probs[lo] -= eps;
    shifted.probs[hi] += eps;
    CHECK(expected_score(shifted) >= expected_score(d) - 1e-12);
  }
}

TEST_CASE("normalized expectation of any valid distribution lies in [0,1]") {
  Rng rng(161803);
  for (int i = 0; i < 500; ++i) {
    ScoreDistribution d;
    d.values = ScoreDistribution::six_point_values();
    d.probs.resize(6);
    double z = 0.0;
    for (double& p : d.probs) {
      p = uniform01(rng);
      z += p;
    }
    for (double& p : d.probs) p /= z;
    const double x = normalize_score(expected_score(d), d.values);
    CHECK(x >= 0.0);
    CHECK(x <= 1.0);
  }
}

TEST_CASE("distribution invariants are enforced") {
  ScoreDistribution bad = uniform_scores();
  bad.probs[0] = 0.9;  // no longer sums to 1
  CHECK_THROWS_AS(bad.validate(), OracleMalformedError);

  ScoreDistribution neg = uniform_scores();
  neg.probs[0] = -0.1;
  neg.probs[1] = 1.0 / 6.0 + 0.1;
  CHECK_THROWS_AS(neg.validate(), OracleMalformedError);

  ScoreDistribution unordered = uniform_scores();
  unordered.values[3] = unordered.values[2];
  CHECK_THROWS_AS(unordered.validate(), OracleMalformedError);
}

namespace {

struct MockWorld {
  Vocabulary vocab = default_vocabulary();
  std::vector<SceneProfile> profiles =
      make_scene_profiles(11, 2, vocab, 8);
  MockRewardOracle oracle{vocab,
                          {{0, profiles[0].lexicon}, {1, profiles[1].lexicon}}};
};

Rollout rollout_of(std::vector<TokenId> tokens) {
  Rollout r;
  r.tokens = std::move(tokens);
  return r;
}

}  // namespace

TEST_CASE("mock alignment: exact match is a point mass on the top score") {
  MockWorld w;
  const ActionPlan& ref = w.profiles[0].plan;
  const auto b = score_rollout(rollout_of(serialize_action_plan(ref)), ref, 0,
                               w.oracle, RewardWeights{}, w.vocab);
  CHECK(b.format == 1);
  CHECK(b.alignment_norm == 1.0);
  CHECK(b.alignment_raw.probs[5] == 1.0);
}

TEST_CASE("mock alignment is order-sensitive and penalizes broken plans") {
  MockWorld w;
  const ActionPlan& ref = w.profiles[0].plan;
  const auto exact = score_rollout(rollout_of(serialize_action_plan(ref)), ref,
                                   0, w.oracle, RewardWeights{}, w.vocab);

  // same content, segments swapped between dimensions 2 and 7
  ActionPlan swapped = ref;
  std::swap(swapped.segment(2), swapped.segment(7));
  const auto crossed =
      score_rollout(rollout_of(serialize_action_plan(swapped)), ref, 0,
                    w.oracle, RewardWeights{}, w.vocab);
  CHECK(crossed.alignment_norm < exact.alignment_norm);

  // same content with the delimiters stripped: parse fails, penalty applies
  const auto bare = score_rollout(rollout_of(ref.flat_content()), ref, 0,
                                  w.oracle, RewardWeights{}, w.vocab);
  CHECK(bare.format == 0);
  CHECK(bare.alignment_norm < 1.0);
  CHECK(bare.alignment_norm > 0.0);  // still shaped signal
}

TEST_CASE("mock creativity: actionable tokens score, forbidden tokens cap") {
  MockWorld w;
  const SceneProfile& sp = w.profiles[0];
  const ActionPlan& ref = sp.plan;

  const auto full = score_rollout(rollout_of(serialize_action_plan(ref)), ref,
                                  0, w.oracle, RewardWeights{}, w.vocab);
  CHECK(full.creativity_norm == 1.0);

  ActionPlan tainted = ref;
  tainted.segment(4).push_back(w.vocab.id_of("add-person"));
  const auto capped =
      score_rollout(rollout_of(serialize_action_plan(tainted)), ref, 0,
                    w.oracle, RewardWeights{}, w.vocab);
  CHECK(capped.creativity_norm <= 0.2);
}

TEST_CASE("unparseable rollouts still get all three components") {
  MockWorld w;
  const ActionPlan& ref = w.profiles[1].plan;
  std::vector<TokenId> junk = ref.flat_content();
  junk.push_back(Vocabulary::open_id(3));  // trailing unbalanced open

  const RewardWeights weights;
  const auto b = score_rollout(rollout_of(junk), ref, 1, w.oracle, weights,
                               w.vocab);
  CHECK(b.format == 0);
  CHECK(b.alignment_norm > 0.0);
  CHECK(b.creativity_norm > 0.0);
  const double recombined = combine_rewards(b.format, b.alignment_norm,
                                            b.creativity_norm, weights);
  CHECK(std::abs(b.combined - recombined) <= 1e-15);
}

TEST_CASE("mock oracle is deterministic byte for byte") {
  MockWorld w;
  const ActionPlan& ref = w.profiles[0].plan;
  ActionPlan other = ref;
  other.segment(3).clear();
  const auto tokens = serialize_action_plan(other);

  const auto a = w.oracle.alignment_query(tokens, ref);
  const auto b = w.oracle.alignment_query(tokens, ref);
  CHECK(a.probs == b.probs);
  const auto c = w.oracle.creativity_query(0, tokens);
  const auto d = w.oracle.creativity_query(0, tokens);
  CHECK(c.probs == d.probs);
}

TEST_CASE("levenshtein ground truths") {
  const std::vector<TokenId> a{1, 2, 3}, b{1, 3}, empty;
  CHECK(levenshtein(a, a) == 0);
  CHECK(levenshtein(a, b) == 1);
  CHECK(levenshtein(a, empty) == 3);
  CHECK(levenshtein(empty, b) == 2);
}
