#include "planedit/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>

#include "planedit/util.hpp"

namespace planedit {

namespace {

void check_prompt(const PolicyParams& params, int prompt) {
  if (prompt < 0 || prompt >= params.num_prompts) {
    throw UnknownTokenError("prompt id out of range: " +
                            std::to_string(prompt));
  }
}

void check_token(const PolicyParams& params, TokenId tok) {
  if (tok < 0 || tok >= params.vocab_size) {
    throw UnknownTokenError("token id out of range: " + std::to_string(tok));
  }
}

// Stable softmax of one table row into `out`.
void softmax_row(std::span<const double> row, double temperature,
                 std::vector<double>& out) {
  out.resize(row.size());
  double mx = row[0];
  for (double v : row) mx = std::max(mx, v);
  double z = 0.0;
  for (size_t k = 0; k < row.size(); ++k) {
    out[k] = std::exp((row[k] - mx) / temperature);
    z += out[k];
  }
  for (double& p : out) p /= z;
}

std::span<const double> row_view(const PolicyParams& params, size_t offset) {
  return {params.logits.data() + offset,
          static_cast<size_t>(params.vocab_size)};
}

}  // namespace

PolicyParams PolicyParams::zeros(int num_prompts, int vocab_size, int max_len,
                                 uint64_t vocab_hash, int bucket_width,
                                 double temperature) {
  PolicyParams p;
  p.num_prompts = num_prompts;
  p.vocab_size = vocab_size;
  p.bucket_width = bucket_width;
  p.num_buckets = std::max(1, (max_len + bucket_width - 1) / bucket_width);
  p.temperature = temperature;
  p.vocab_hash = vocab_hash;
  p.logits.assign(p.table_size(), 0.0);
  return p;
}

size_t PolicyParams::row_offset(int prompt, TokenId prev,
                                size_t position) const {
  const size_t prev_index = static_cast<size_t>(prev + 1);  // -1 -> 0
  const size_t bucket = static_cast<size_t>(bucket_of(position));
  const size_t row =
      (static_cast<size_t>(prompt) * (vocab_size + 1) + prev_index) *
          num_buckets +
      bucket;
  return row * static_cast<size_t>(vocab_size);
}

bool PolicyParams::finite() const { return all_finite(logits); }

void PolicyParams::add_noise(uint64_t seed, double scale) {
  Rng rng(mix_seed(seed, fnv1a64("policy-noise")));
  for (double& v : logits) v += scale * normal01(rng);
}

double Rollout::total_logprob() const {
  double s = 0.0;
  for (double lp : logprobs) s += lp;
  return s;
}

std::vector<double> conditional_distribution(const PolicyParams& params,
                                             int prompt,
                                             std::span<const TokenId> context) {
  check_prompt(params, prompt);
  for (TokenId t : context) check_token(params, t);
  const TokenId prev = context.empty() ? -1 : context.back();
  const size_t off = params.row_offset(prompt, prev, context.size());
  std::vector<double> probs;
  softmax_row(row_view(params, off), params.temperature, probs);
  return probs;
}

namespace {

Rollout sample_one(const PolicyParams& params, int prompt, uint64_t seed,
                   const SampleOptions& opts) {
  Rollout r;
  r.prompt_id = prompt;
  Rng rng(seed);
  std::vector<double> probs;
  std::vector<TokenId> ctx;
  for (int step = 0; step < opts.max_len; ++step) {
    const TokenId prev = ctx.empty() ? -1 : ctx.back();
    const size_t off = params.row_offset(prompt, prev, ctx.size());
    softmax_row(row_view(params, off), params.temperature, probs);

    // Inverse-CDF draw; the trailing bucket absorbs rounding remainder.
    const double u = uniform01(rng);
    double acc = 0.0;
    TokenId tok = params.vocab_size - 1;
    for (TokenId k = 0; k < params.vocab_size; ++k) {
      acc += probs[k];
      if (u < acc) {
        tok = k;
        break;
      }
    }

    r.tokens.push_back(tok);
    r.logprobs.push_back(std::log(probs[tok]));
    if (opts.retain_distributions) r.step_distributions.push_back(probs);
    ctx.push_back(tok);
    if (opts.end_token && tok == *opts.end_token) break;
  }
  return r;
}

}  // namespace

SampledGroup sample_group(const PolicyParams& params, int prompt, int n,
                          uint64_t seed, const SampleOptions& opts) {
  if (n < 2) throw GroupTooSmallError("group size must be >= 2");
  check_prompt(params, prompt);
  SampledGroup group;
  group.prompt_id = prompt;
  group.rollouts.resize(n);
  parallel_for(
      static_cast<size_t>(n), opts.parallelism, [&](size_t i) {
        group.rollouts[i] =
            sample_one(params, prompt, mix_seed(seed, i), opts);
      });
  return group;
}

std::vector<TokenId> greedy_decode(const PolicyParams& params, int prompt,
                                   int max_len,
                                   std::optional<TokenId> end_token) {
  check_prompt(params, prompt);
  std::vector<TokenId> out;
  std::vector<double> probs;
  for (int step = 0; step < max_len; ++step) {
    const TokenId prev = out.empty() ? -1 : out.back();
    const size_t off = params.row_offset(prompt, prev, out.size());
    softmax_row(row_view(params, off), params.temperature, probs);
    const auto it = std::max_element(probs.begin(), probs.end());
    const TokenId tok = static_cast<TokenId>(it - probs.begin());
    out.push_back(tok);
    if (end_token && tok == *end_token) break;
  }
  return out;
}

double sequence_logprob(const PolicyParams& params, int prompt,
                        std::span<const TokenId> tokens) {
  check_prompt(params, prompt);
  for (TokenId t : tokens) check_token(params, t);
  double total = 0.0;
  std::vector<double> probs;
  for (size_t j = 0; j < tokens.size(); ++j) {
    const TokenId prev = j == 0 ? -1 : tokens[j - 1];
    const size_t off = params.row_offset(prompt, prev, j);
    softmax_row(row_view(params, off), params.temperature, probs);
    total += std::log(probs[tokens[j]]);
  }
  return total;
}

double exact_kl(const PolicyParams& params, const PolicyParams& ref,
                int prompt, std::span<const TokenId> context) {
  if (params.vocab_size != ref.vocab_size) {
    throw CheckpointMismatchError("policy and reference vocabulary differ");
  }
  const std::vector<double> p = conditional_distribution(params, prompt, context);
  const std::vector<double> q = conditional_distribution(ref, prompt, context);
  double kl = 0.0;
  for (size_t k = 0; k < p.size(); ++k) {
    kl += p[k] * (std::log(p[k]) - std::log(q[k]));
  }
  return std::max(0.0, kl);  // clamp -0.0 / rounding dust at identity
}

void accumulate_logprob_gradient(const PolicyParams& params, int prompt,
                                 std::span<const TokenId> tokens, double scale,
                                 std::vector<double>& grad) {
  check_prompt(params, prompt);
  for (TokenId t : tokens) check_token(params, t);
  std::vector<double> probs;
  const double inv_t = 1.0 / params.temperature;
  for (size_t j = 0; j < tokens.size(); ++j) {
    const TokenId prev = j == 0 ? -1 : tokens[j - 1];
    const size_t off = params.row_offset(prompt, prev, j);
    softmax_row(row_view(params, off), params.temperature, probs);
    // d log p(k) / d z_j = (1[j==k] - p_j) / T
    for (int k = 0; k < params.vocab_size; ++k) {
      grad[off + k] -= scale * inv_t * probs[k];
    }
    grad[off + tokens[j]] += scale * inv_t;
  }
}

void accumulate_kl_gradient(const PolicyParams& params,
                            const PolicyParams& ref, int prompt,
                            std::span<const TokenId> context, double scale,
                            std::vector<double>& grad) {
  const std::vector<double> p = conditional_distribution(params, prompt, context);
  const std::vector<double> q = conditional_distribution(ref, prompt, context);
  double kl = 0.0;
  for (size_t k = 0; k < p.size(); ++k) {
    kl += p[k] * (std::log(p[k]) - std::log(q[k]));
  }
  const TokenId prev = context.empty() ? -1 : context.back();
  const size_t off = params.row_offset(prompt, prev, context.size());
  const double inv_t = 1.0 / params.temperature;
  // d KL / d z_j = p_j * ((log p_j - log q_j) - KL) / T
  for (size_t k = 0; k < p.size(); ++k) {
    grad[off + k] +=
        scale * inv_t * p[k] * ((std::log(p[k]) - std::log(q[k])) - kl);
  }
}

std::vector<double> logprob_gradient(const PolicyParams& params, int prompt,
                                     std::span<const TokenId> tokens) {
  std::vector<double> grad(params.table_size(), 0.0);
  accumulate_logprob_gradient(params, prompt, tokens, 1.0, grad);
  return grad;
}

namespace {
constexpr const char* kPolicyFormat = "planedit-policy-v1";
}

std::string policy_to_json(const PolicyParams& params) {
  nlohmann::json j{
      {"format", kPolicyFormat},
      {"num_prompts", params.num_prompts},
      {"vocab_size", params.vocab_size},
      {"num_buckets", params.num_buckets},
      {"bucket_width", params.bucket_width},
      {"temperature", params.temperature},
      {"vocab_hash", params.vocab_hash},
      {"logits", params.logits},
  };
  return j.dump();
}

PolicyParams policy_from_json(const std::string& text,
                              uint64_t expected_vocab_hash) {
  const auto j = nlohmann::json::parse(text);
  if (!j.contains("format") || j.at("format").get<std::string>() != kPolicyFormat) {
    throw CheckpointMismatchError("not a policy checkpoint (bad format tag)");
  }
  PolicyParams p;
  p.num_prompts = j.at("num_prompts").get<int>();
  p.vocab_size = j.at("vocab_size").get<int>();
  p.num_buckets = j.at("num_buckets").get<int>();
  p.bucket_width = j.at("bucket_width").get<int>();
  p.temperature = j.at("temperature").get<double>();
  p.vocab_hash = j.at("vocab_hash").get<uint64_t>();
  p.logits = j.at("logits").get<std::vector<double>>();
  if (p.logits.size() != p.table_size()) {
    throw CheckpointMismatchError("policy checkpoint has wrong table size");
  }
  if (expected_vocab_hash != 0 && p.vocab_hash != expected_vocab_hash) {
    throw CheckpointMismatchError(
        "policy checkpoint was trained against a different vocabulary");
  }
  return p;
}

void save_policy(const std::string& path, const PolicyParams& params) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write checkpoint: " + path);
  os << policy_to_json(params);
}

PolicyParams load_policy(const std::string& path,
                         uint64_t expected_vocab_hash) {
  std::ifstream is(path);
  if (!is) throw CheckpointMismatchError("cannot read checkpoint: " + path);
  std::string text((std::istreambuf_iterator<char>(is)),
                   std::istreambuf_iterator<char>());
  return policy_from_json(text, expected_vocab_hash);
}

}  // namespace planedit
