#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "planedit/corpus.hpp"
#include "planedit/grpo.hpp"

using namespace planedit;

namespace {

struct GrpoWorld {
  Vocabulary vocab = default_vocabulary();
  std::vector<SceneProfile> profiles = make_scene_profiles(29, 1, vocab, 8);
  MockRewardOracle oracle{vocab, {{0, profiles[0].lexicon}}};

  GrpoTask task() const {
    GrpoTask t;
    t.prompt_ids = {0};
    t.references[0] = profiles[0].plan;
    return t;
  }

  PolicyParams uniform(int max_len = 40) const {
    return PolicyParams::zeros(1, vocab.size(), max_len, vocab.fingerprint());
  }
};

struct ConstantOracle final : RewardOracle {
  ScoreDistribution alignment_query(std::span<const TokenId>,
                                    const ActionPlan&) override {
    return ScoreDistribution::point_mass(3);
  }
  ScoreDistribution creativity_query(int, std::span<const TokenId>) override {
    return ScoreDistribution::point_mass(3);
  }
};

struct FailingOracle final : RewardOracle {
  ScoreDistribution alignment_query(std::span<const TokenId>,
                                    const ActionPlan&) override {
    throw OracleUnavailableError("scripted outage");
  }
  ScoreDistribution creativity_query(int, std::span<const TokenId>) override {
    throw OracleUnavailableError("scripted outage");
  }
};

}  // namespace

TEST_CASE("advantages on the worked examples") {
  const auto a = compute_advantages(std::vector<double>{1, 2, 3}, 1e-6);
  const double unit = 1.0 / std::sqrt(2.0 / 3.0);
  CHECK(std::abs(a.advantage[0] + unit) <= 1e-9);
  CHECK(std::abs(a.advantage[1]) <= 1e-9);
  CHECK(std::abs(a.advantage[2] - unit) <= 1e-9);
  CHECK(a.reward_mean == doctest::Approx(2.0));
  CHECK(a.reward_std == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));

  const auto b = compute_advantages(std::vector<double>{0, 1}, 1e-6);
  CHECK(std::abs(b.advantage[0] + 1.0) <= 1e-12);
  CHECK(std::abs(b.advantage[1] - 1.0) <= 1e-12);

  const auto c = compute_advantages(std::vector<double>{4, 4, 4, 4}, 1e-6);
  CHECK(c.degenerate);
  for (double x : c.advantage) CHECK(x == 0.0);

  CHECK_THROWS_AS((void)compute_advantages(std::vector<double>{1.0}, 1e-6),
                  GroupTooSmallError);
}

TEST_CASE("advantage standardization properties over random groups") {
  Rng rng(404);
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t n = 2 + uniform_index(rng, 15);
    std::vector<double> rewards(n);
    for (double& r : rewards) r = uniform01(rng);
    const auto adv = compute_advantages(rewards, 1e-6);
    if (adv.degenerate) continue;
    CHECK(std::abs(mean_of(adv.advantage)) <= 1e-9);
    CHECK(std::abs(population_std(adv.advantage) - 1.0) <= 1e-6);

    // shift and positive-scale invariance
    std::vector<double> shifted(rewards), scaled(rewards);
    for (double& r : shifted) r += 3.7;
    for (double& r : scaled) r *= 2.3;
    const auto advs = compute_advantages(shifted, 1e-6);
    const auto advk = compute_advantages(scaled, 1e-6);
    for (size_t i = 0; i < n; ++i) {
      CHECK(std::abs(advs.advantage[i] - adv.advantage[i]) <= 1e-9);
      CHECK(std::abs(advk.advantage[i] - adv.advantage[i]) <= 1e-9);
    }
  }
}

TEST_CASE("objective composes the advantage and KL terms") {
  GrpoWorld w;

  // identical policies: KL contributes nothing
  PolicyParams p = w.uniform();
  SampledGroup g;
  g.prompt_id = 0;
  g.rollouts.resize(2);
  g.rollouts[0].tokens = {0};
  g.rollouts[1].tokens = {1};
  AdvantageSet adv;
  adv.advantage = {0.0, 0.0};
  CHECK(grpo_objective(g, adv, p, p, 1.0) == 0.0);

  // zero advantages, beta=1, known binary KL
  PolicyParams a = PolicyParams::zeros(1, 2, 4, 1);
  PolicyParams b = PolicyParams::zeros(1, 2, 4, 1);
  a.logits[a.row_offset(0, -1, 0) + 0] = std::log(0.9);
  a.logits[a.row_offset(0, -1, 0) + 1] = std::log(0.1);
  b.logits[b.row_offset(0, -1, 0) + 0] = std::log(0.5);
  b.logits[b.row_offset(0, -1, 0) + 1] = std::log(0.5);
  const double kl = 0.9 * std::log(1.8) + 0.1 * std::log(0.2);
  CHECK(grpo_objective(g, adv, a, b, 1.0) ==
        doctest::Approx(-kl).epsilon(1e-9));

  // nonzero advantages, beta=0: token-weighted mean of A_i
  adv.advantage = {1.0, -1.0};
  g.rollouts[0].tokens = {0, 1, 0};  // 3 tokens at +1
  g.rollouts[1].tokens = {1};        // 1 token at -1
  CHECK(grpo_objective(g, adv, p, p, 0.0) ==
        doctest::Approx((3.0 - 1.0) / 4.0).epsilon(1e-12));
}

TEST_CASE("grpo steps are deterministic given the seed") {
  GrpoWorld w;
  GrpoConfig cfg;
  cfg.steps = 5;
  cfg.group_size = 4;
  cfg.max_len = 24;
  cfg.seed = 12;

  GrpoTrainer a(w.uniform(24), w.uniform(24), w.task(), w.oracle,
                RewardWeights{}, w.vocab, cfg);
  GrpoTrainer b(w.uniform(24), w.uniform(24), w.task(), w.oracle,
                RewardWeights{}, w.vocab, cfg);
  const auto ra = a.run();
  const auto rb = b.run();
  CHECK(a.params().logits == b.params().logits);
  for (size_t i = 0; i < ra.size(); ++i) {
    CHECK(ra[i].mean_reward == rb[i].mean_reward);
    CHECK(ra[i].objective == rb[i].objective);
  }
}

TEST_CASE("all-equal rewards with zero beta leave parameters untouched") {
  GrpoWorld w;
  ConstantOracle constant;
  GrpoConfig cfg;
  cfg.steps = 1;
  cfg.group_size = 4;
  cfg.beta = 0.0;
  cfg.max_len = 8;

  // Degenerate policy: every rollout is identical, so every reward is too.
  PolicyParams p = w.uniform(8);
  for (size_t row = 0; row < p.table_rows(); ++row) {
    p.logits[row * p.vocab_size + 5] = 50.0;
  }
  const std::vector<double> before = p.logits;
  GrpoTrainer trainer(std::move(p), w.uniform(8), w.task(), constant,
                      RewardWeights{}, w.vocab, cfg);
  const auto report = trainer.step();
  CHECK(trainer.params().logits == before);
  CHECK(report.mean_kl > 0.0);  // KL is still reported
}

TEST_CASE("an oracle outage skips the update instead of half-applying it") {
  GrpoWorld w;
  FailingOracle failing;
  GrpoConfig cfg;
  cfg.group_size = 4;
  cfg.max_len = 8;
  PolicyParams start = w.uniform(8);
  start.add_noise(3, 0.2);
  const std::vector<double> before = start.logits;
  GrpoTrainer trainer(std::move(start), w.uniform(8), w.task(), failing,
                      RewardWeights{}, w.vocab, cfg);
  CHECK_THROWS_AS((void)trainer.step(), OracleUnavailableError);
  CHECK(trainer.params().logits == before);
}

TEST_CASE("reward climbs on the single-target task") {
  // GRPO picks up where the cold start leaves off: a few SFT steps on the
  // gold plan give a noisy imitation, and the policy gradient finishes it.
  GrpoWorld w;
  const std::vector<SftExample> gold{
      {0, serialize_action_plan(w.profiles[0].plan)}};
  PolicyParams start = w.uniform(40);
  for (int s = 0; s < 25; ++s) start = sft_step(start, gold, 1.0);

  GrpoConfig cfg;
  cfg.steps = 150;
  cfg.group_size = 8;
  cfg.lr = 16.0;
  cfg.beta = 0.005;
  cfg.max_len = 40;
  cfg.seed = 3;
  GrpoTrainer trainer(start, start, w.task(), w.oracle, RewardWeights{},
                      w.vocab, cfg);
  const auto reports = trainer.run();
  double early = 0.0, late = 0.0;
  for (int i = 0; i < 10; ++i) early += reports[i].mean_reward;
  for (int i = 0; i < 10; ++i) late += reports[reports.size() - 1 - i].mean_reward;
  CHECK(late / 10.0 > early / 10.0 + 0.1);
}

TEST_CASE("a huge KL coefficient pulls the policy back toward the reference") {
  GrpoWorld w;
  PolicyParams ref = w.uniform(16);
  PolicyParams start = ref;
  start.add_noise(99, 0.5);

  GrpoConfig cfg;
  cfg.steps = 30;
  cfg.group_size = 4;
  cfg.beta = 1e3;
  cfg.lr = 0.2;
  cfg.max_len = 16;
  cfg.seed = 8;
  GrpoTrainer trainer(std::move(start), std::move(ref), w.task(), w.oracle,
                      RewardWeights{}, w.vocab, cfg);
  const auto reports = trainer.run();
  CHECK(reports.back().mean_kl < reports.front().mean_kl);
}
