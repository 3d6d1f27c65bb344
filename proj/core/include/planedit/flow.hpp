#pragma once

// Action-conditioned rectified-flow editor over small latent vectors.
//
// Data sits at t=1 and noise at t=0: x_t = t*x0 + (1-t)*x1 with constant
// velocity target v = x0 - x1. A small tanh MLP learns the velocity field
// from (x_t, t, h) where h is a frozen featurization of (prompt, plan);
// sampling Euler-integrates the field from noise to t=1.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "planedit/errors.hpp"
#include "planedit/grammar.hpp"
#include "planedit/util.hpp"

namespace planedit {

using LatentVec = std::vector<double>;

// Exact linear interpolation and its constant velocity target.
// Returns (x_t, v_t); throws DimensionMismatchError.
std::pair<LatentVec, LatentVec> interpolate(const LatentVec& x0,
                                            const LatentVec& x1, double t);

// Frozen conditioning encoder: prompt one-hot plus per-dimension hashed
// content-token counts, pushed through a fixed seeded random projection.
// Unparseable token sequences fall back to hashing into the whole grid, so
// invalid plans still featurize deterministically.
struct EncoderConfig {
  int num_prompts = 1;
  int hash_buckets = 8;
  int out_dim = 16;
  uint64_t seed = 0x70a1bce5u;
};

class PlanEncoder {
 public:
  explicit PlanEncoder(EncoderConfig config);

  int in_dim() const {
    return cfg_.num_prompts + kNumDimensions * cfg_.hash_buckets;
  }
  int out_dim() const { return cfg_.out_dim; }
  const EncoderConfig& config() const { return cfg_; }

  LatentVec encode(int prompt, std::span<const TokenId> tokens,
                   const Vocabulary& vocab) const;

 private:
  EncoderConfig cfg_;
  std::vector<double> projection_;  // out_dim x in_dim, row-major
};

// Two-hidden-layer tanh MLP (x_t, t, h) -> velocity, parameters packed flat
// so gradient checks and the optimizer can treat them uniformly.
struct VelocityNet {
  int latent_dim = 8;
  int cond_dim = 16;
  int hidden = 64;
  std::vector<double> params;

  static VelocityNet init(int latent_dim, int cond_dim, int hidden,
                          uint64_t seed);

  int in_dim() const { return latent_dim + 1 + cond_dim; }
  size_t param_count() const;

  LatentVec forward(const LatentVec& xt, double t, const LatentVec& h) const;
};

struct FlowTuple {
  LatentVec x0, x1;
  double t = 0.0;
  LatentVec xt, vt;
  LatentVec h;
};

FlowTuple make_flow_tuple(LatentVec x0, LatentVec x1, double t, LatentVec h);

using FlowBatch = std::vector<FlowTuple>;

// Mean over the batch of the squared error summed over dimensions.
double fm_loss(const VelocityNet& net, const FlowBatch& batch);

// Analytic gradient of fm_loss w.r.t. net.params (verified against central
// finite differences in the test suite).
std::pair<double, std::vector<double>> fm_loss_grad(const VelocityNet& net,
                                                    const FlowBatch& batch);

struct FlowExample {
  int prompt_id = 0;
  std::vector<TokenId> plan_tokens;
  LatentVec x0;
  LatentVec h;  // cached encoder output
};

// One full-pass plain gradient step: draws x1 ~ N(0,I) and t ~ U[0,1) per
// example, builds the batch, descends. Returns the pre-step loss.
double editor_train_step(VelocityNet& net, std::span<const FlowExample> data,
                         Rng& rng, double lr);

struct EditorTrainConfig {
  int steps = 4000;
  int batch_size = 64;  // 0 = full batch
  double lr = 3e-3;
  uint64_t seed = 1;
  bool adam = true;  // minibatch runs use Adam; plain GD otherwise
};

class EditorTrainer {
 public:
  EditorTrainer(VelocityNet net, EditorTrainConfig config);

  double step(std::span<const FlowExample> data);  // returns batch loss
  std::vector<double> run(std::span<const FlowExample> data);

  const VelocityNet& net() const { return net_; }

 private:
  VelocityNet net_;
  EditorTrainConfig cfg_;
  Rng rng_;
  std::vector<double> adam_m_, adam_v_;
  int adam_t_ = 0;
};

// Euler integration of the learned field from x ~ N(0,I) at t=0 up to t=1;
// the t=1 state estimates the conditioned data latent.
LatentVec sample_ode(const VelocityNet& net, const LatentVec& h, int steps,
                     Rng& rng);

// Editor checkpoints embed the net shape, encoder config, and vocabulary
// fingerprint.
std::string editor_to_json(const VelocityNet& net, const EncoderConfig& enc,
                           uint64_t vocab_hash);
struct EditorCheckpoint {
  VelocityNet net;
  EncoderConfig encoder;
  uint64_t vocab_hash = 0;
};
EditorCheckpoint editor_from_json(const std::string& text,
                                  uint64_t expected_vocab_hash = 0);
void save_editor(const std::string& path, const VelocityNet& net,
                 const EncoderConfig& enc, uint64_t vocab_hash);
EditorCheckpoint load_editor(const std::string& path,
                             uint64_t expected_vocab_hash = 0);

}  // namespace planedit
