#pragma once

// Autoregressive categorical policy over the action vocabulary.
//
// The policy is a logit table keyed by (prompt id, previous token, position
// bucket); conditionals are softmax(logits / temperature). Small enough that
// distributions, KL divergences, and log-prob gradients are all exact, which
// is what makes the optimization loops above it verifiable.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "planedit/errors.hpp"
#include "planedit/grammar.hpp"

namespace planedit {

struct PolicyParams {
  int num_prompts = 1;
  int vocab_size = 2;
  int num_buckets = 1;
  int bucket_width = 4;
  double temperature = 1.0;
  uint64_t vocab_hash = 0;  // Vocabulary::fingerprint of the alphabet
  std::vector<double> logits;  // [prompt][prev + 1][bucket][token]

  static PolicyParams zeros(int num_prompts, int vocab_size, int max_len,
                            uint64_t vocab_hash, int bucket_width = 4,
                            double temperature = 1.0);

  size_t table_rows() const {
    return static_cast<size_t>(num_prompts) * (vocab_size + 1) * num_buckets;
  }
  size_t table_size() const { return table_rows() * vocab_size; }

  // prev = -1 at the start of a sequence.
  size_t row_offset(int prompt, TokenId prev, size_t position) const;

  int bucket_of(size_t position) const {
    const size_t b = position / static_cast<size_t>(bucket_width);
    return static_cast<int>(std::min<size_t>(b, num_buckets - 1));
  }

  bool finite() const;
  void add_noise(uint64_t seed, double scale);  // test/ablation helper
};

struct Rollout {
  int prompt_id = 0;
  std::vector<TokenId> tokens;
  std::vector<double> logprobs;  // one per token, each <= 0
  // Retained only when requested at sampling time.
  std::vector<std::vector<double>> step_distributions;

  double total_logprob() const;
};

struct SampledGroup {
  int prompt_id = 0;
  std::vector<Rollout> rollouts;
  int size() const { return static_cast<int>(rollouts.size()); }
};

struct SampleOptions {
  int max_len = 64;
  std::optional<TokenId> end_token;
  bool retain_distributions = false;
  int parallelism = 1;
};

// Full probability vector at one decoding step. Deterministic given inputs.
std::vector<double> conditional_distribution(const PolicyParams& params,
                                             int prompt,
                                             std::span<const TokenId> context);

// N ancestral rollouts from the policy. Per-rollout RNG streams derive from
// (seed, rollout index), so serial and parallel sampling agree exactly.
SampledGroup sample_group(const PolicyParams& params, int prompt, int n,
                          uint64_t seed, const SampleOptions& opts);

// Argmax decoding; ties resolve to the lowest token id.
std::vector<TokenId> greedy_decode(const PolicyParams& params, int prompt,
                                   int max_len,
                                   std::optional<TokenId> end_token);

// Sum of per-token conditional log-probs under teacher forcing.
double sequence_logprob(const PolicyParams& params, int prompt,
                        std::span<const TokenId> tokens);

// Exact KL(pi_params || pi_ref) between the two conditionals at this context.
double exact_kl(const PolicyParams& params, const PolicyParams& ref,
                int prompt, std::span<const TokenId> context);

// grad += scale * d(sequence_logprob)/d(logits); grad has table layout.
void accumulate_logprob_gradient(const PolicyParams& params, int prompt,
                                 std::span<const TokenId> tokens, double scale,
                                 std::vector<double>& grad);

// grad += scale * d exact_kl(params, ref, context) / d(params.logits).
void accumulate_kl_gradient(const PolicyParams& params,
                            const PolicyParams& ref, int prompt,
                            std::span<const TokenId> context, double scale,
                            std::vector<double>& grad);

std::vector<double> logprob_gradient(const PolicyParams& params, int prompt,
                                     std::span<const TokenId> tokens);

// Versioned JSON checkpoints. Loading validates the format tag and, when
// expected_vocab_hash is nonzero, the embedded vocabulary fingerprint.
std::string policy_to_json(const PolicyParams& params);
PolicyParams policy_from_json(const std::string& text,
                              uint64_t expected_vocab_hash = 0);
void save_policy(const std::string& path, const PolicyParams& params);
PolicyParams load_policy(const std::string& path,
                         uint64_t expected_vocab_hash = 0);

}  // namespace planedit
