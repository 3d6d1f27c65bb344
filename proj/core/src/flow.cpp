#include "planedit/flow.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>

namespace planedit {

std::pair<LatentVec, LatentVec> interpolate(const LatentVec& x0,
                                            const LatentVec& x1, double t) {
  if (x0.size() != x1.size()) {
    throw DimensionMismatchError("interpolate: x0 and x1 dimensions differ");
  }
  LatentVec xt(x0.size()), vt(x0.size());
  for (size_t i = 0; i < x0.size(); ++i) {
    xt[i] = t * x0[i] + (1.0 - t) * x1[i];
    vt[i] = x0[i] - x1[i];
  }
  return {std::move(xt), std::move(vt)};
}

PlanEncoder::PlanEncoder(EncoderConfig config) : cfg_(config) {
  Rng rng(mix_seed(cfg_.seed, fnv1a64("plan-encoder-projection")));
  const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim()));
  projection_.resize(static_cast<size_t>(cfg_.out_dim) * in_dim());
  for (double& w : projection_) w = scale * normal01(rng);
}

LatentVec PlanEncoder::encode(int prompt, std::span<const TokenId> tokens,
                              const Vocabulary& vocab) const {
  std::vector<double> f(in_dim(), 0.0);
  if (prompt >= 0 && prompt < cfg_.num_prompts) f[prompt] = 1.0;

  const int grid = kNumDimensions * cfg_.hash_buckets;
  const ParseResult parsed = parse_action_plan(tokens, vocab);
  if (parsed.ok) {
    for (int dim = 1; dim <= kNumDimensions; ++dim) {
      for (TokenId tok : parsed.plan.segment(dim)) {
        const size_t bucket =
            splitmix64(static_cast<uint64_t>(tok)) % cfg_.hash_buckets;
        f[cfg_.num_prompts + (dim - 1) * cfg_.hash_buckets + bucket] += 1.0;
      }
    }
  } else {
    // Raw-token fallback: spread content over the whole grid.
    for (TokenId tok : tokens) {
      if (Vocabulary::is_delimiter(tok)) continue;
      const size_t cell = splitmix64(static_cast<uint64_t>(tok)) % grid;
      f[cfg_.num_prompts + cell] += 1.0;
    }
  }

  LatentVec h(cfg_.out_dim, 0.0);
  for (int o = 0; o < cfg_.out_dim; ++o) {
    const double* row = projection_.data() + static_cast<size_t>(o) * in_dim();
    double acc = 0.0;
    for (int i = 0; i < in_dim(); ++i) acc += row[i] * f[i];
    h[o] = acc;
  }
  return h;
}

namespace {

// Packed parameter offsets: w1, b1, w2, b2, w3, b3.
struct Off {
  size_t w1, b1, w2, b2, w3, b3, total;
  Off(int d, int in, int hid) {
    w1 = 0;
    b1 = w1 + static_cast<size_t>(hid) * in;
    w2 = b1 + hid;
    b2 = w2 + static_cast<size_t>(hid) * hid;
    w3 = b2 + hid;
    b3 = w3 + static_cast<size_t>(d) * hid;
    total = b3 + d;
  }
};

struct ForwardCache {
  std::vector<double> u, z1, a1, z2, a2, y;
};

void forward_cached(const VelocityNet& net, const LatentVec& xt, double t,
                    const LatentVec& h, ForwardCache& c) {
  const int in = net.in_dim(), hid = net.hidden, d = net.latent_dim;
  const Off off(d, in, hid);
  const double* p = net.params.data();

  c.u.resize(in);
  std::copy(xt.begin(), xt.end(), c.u.begin());
  c.u[net.latent_dim] = t;
  std::copy(h.begin(), h.end(), c.u.begin() + net.latent_dim + 1);

  c.z1.assign(hid, 0.0);
  c.a1.resize(hid);
  for (int i = 0; i < hid; ++i) {
    const double* row = p + off.w1 + static_cast<size_t>(i) * in;
    double acc = p[off.b1 + i];
    for (int j = 0; j < in; ++j) acc += row[j] * c.u[j];
    c.z1[i] = acc;
    c.a1[i] = std::tanh(acc);
  }
  c.z2.assign(hid, 0.0);
  c.a2.resize(hid);
  for (int i = 0; i < hid; ++i) {
    const double* row = p + off.w2 + static_cast<size_t>(i) * hid;
    double acc = p[off.b2 + i];
    for (int j = 0; j < hid; ++j) acc += row[j] * c.a1[j];
    c.z2[i] = acc;
    c.a2[i] = std::tanh(acc);
  }
  c.y.assign(d, 0.0);
  for (int i = 0; i < d; ++i) {
    const double* row = p + off.w3 + static_cast<size_t>(i) * hid;
    double acc = p[off.b3 + i];
    for (int j = 0; j < hid; ++j) acc += row[j] * c.a2[j];
    c.y[i] = acc;
  }
}

}  // namespace

VelocityNet VelocityNet::init(int latent_dim, int cond_dim, int hidden,
                              uint64_t seed) {
  VelocityNet net;
  net.latent_dim = latent_dim;
  net.cond_dim = cond_dim;
  net.hidden = hidden;
  const Off off(latent_dim, net.in_dim(), hidden);
  net.params.assign(off.total, 0.0);

  Rng rng(mix_seed(seed, fnv1a64("velocity-net-init")));
  const double s1 = 1.0 / std::sqrt(static_cast<double>(net.in_dim()));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (size_t i = off.w1; i < off.b1; ++i) net.params[i] = s1 * normal01(rng);
  for (size_t i = off.w2; i < off.b2; ++i) net.params[i] = s2 * normal01(rng);
  for (size_t i = off.w3; i < off.b3; ++i) net.params[i] = s2 * normal01(rng);
  return net;
}

size_t VelocityNet::param_count() const {
  return Off(latent_dim, in_dim(), hidden).total;
}

LatentVec VelocityNet::forward(const LatentVec& xt, double t,
                               const LatentVec& h) const {
  if (static_cast<int>(xt.size()) != latent_dim ||
      static_cast<int>(h.size()) != cond_dim) {
    throw DimensionMismatchError("velocity net input dimensions differ");
  }
  ForwardCache c;
  forward_cached(*this, xt, t, h, c);
  return c.y;
}

FlowTuple make_flow_tuple(LatentVec x0, LatentVec x1, double t, LatentVec h) {
  FlowTuple ft;
  auto [xt, vt] = interpolate(x0, x1, t);
  ft.x0 = std::move(x0);
  ft.x1 = std::move(x1);
  ft.t = t;
  ft.xt = std::move(xt);
  ft.vt = std::move(vt);
  ft.h = std::move(h);
  return ft;
}

double fm_loss(const VelocityNet& net, const FlowBatch& batch) {
  double total = 0.0;
  ForwardCache c;
  for (const FlowTuple& ft : batch) {
    forward_cached(net, ft.xt, ft.t, ft.h, c);
    for (int k = 0; k < net.latent_dim; ++k) {
      const double e = c.y[k] - ft.vt[k];
      total += e * e;
    }
  }
  return batch.empty() ? 0.0 : total / static_cast<double>(batch.size());
}

std::pair<double, std::vector<double>> fm_loss_grad(const VelocityNet& net,
                                                    const FlowBatch& batch) {
  const int in = net.in_dim(), hid = net.hidden, d = net.latent_dim;
  const Off off(d, in, hid);
  std::vector<double> grad(off.total, 0.0);
  double total = 0.0;
  if (batch.empty()) return {0.0, std::move(grad)};

  const double scale = 1.0 / static_cast<double>(batch.size());
  const double* p = net.params.data();
  ForwardCache c;
  std::vector<double> dy(d), da2(hid), dz2(hid), da1(hid), dz1(hid);

  for (const FlowTuple& ft : batch) {
    forward_cached(net, ft.xt, ft.t, ft.h, c);
    for (int k = 0; k < d; ++k) {
      const double e = c.y[k] - ft.vt[k];
      total += e * e;
      dy[k] = 2.0 * e * scale;
    }
    for (int i = 0; i < d; ++i) {
      double* grow = grad.data() + off.w3 + static_cast<size_t>(i) * hid;
      for (int j = 0; j < hid; ++j) grow[j] += dy[i] * c.a2[j];
      grad[off.b3 + i] += dy[i];
    }
    std::fill(da2.begin(), da2.end(), 0.0);
    for (int i = 0; i < d; ++i) {
      const double* row = p + off.w3 + static_cast<size_t>(i) * hid;
      for (int j = 0; j < hid; ++j) da2[j] += row[j] * dy[i];
    }
    for (int j = 0; j < hid; ++j) dz2[j] = da2[j] * (1.0 - c.a2[j] * c.a2[j]);
    for (int i = 0; i < hid; ++i) {
      double* grow = grad.data() + off.w2 + static_cast<size_t>(i) * hid;
      for (int j = 0; j < hid; ++j) grow[j] += dz2[i] * c.a1[j];
      grad[off.b2 + i] += dz2[i];
    }
    std::fill(da1.begin(), da1.end(), 0.0);
    for (int i = 0; i < hid; ++i) {
      const double* row = p + off.w2 + static_cast<size_t>(i) * hid;
      for (int j = 0; j < hid; ++j) da1[j] += row[j] * dz2[i];
    }
    for (int j = 0; j < hid; ++j) dz1[j] = da1[j] * (1.0 - c.a1[j] * c.a1[j]);
    for (int i = 0; i < hid; ++i) {
      double* grow = grad.data() + off.w1 + static_cast<size_t>(i) * in;
      for (int j = 0; j < in; ++j) grow[j] += dz1[i] * c.u[j];
      grad[off.b1 + i] += dz1[i];
    }
  }
  return {total * scale, std::move(grad)};
}

double editor_train_step(VelocityNet& net, std::span<const FlowExample> data,
                         Rng& rng, double lr) {
  FlowBatch batch;
  batch.reserve(data.size());
  for (const FlowExample& ex : data) {
    LatentVec x1(net.latent_dim);
    for (double& v : x1) v = normal01(rng);
    const double t = uniform01(rng);
    batch.push_back(make_flow_tuple(ex.x0, std::move(x1), t, ex.h));
  }
  auto [loss, grad] = fm_loss_grad(net, batch);
  for (size_t i = 0; i < grad.size(); ++i) net.params[i] -= lr * grad[i];
  return loss;
}

EditorTrainer::EditorTrainer(VelocityNet net, EditorTrainConfig config)
    : net_(std::move(net)),
      cfg_(config),
      rng_(mix_seed(config.seed, fnv1a64("editor-trainer"))) {
  if (cfg_.adam) {
    adam_m_.assign(net_.param_count(), 0.0);
    adam_v_.assign(net_.param_count(), 0.0);
  }
}

double EditorTrainer::step(std::span<const FlowExample> data) {
  FlowBatch batch;
  const size_t bs = cfg_.batch_size > 0
                        ? std::min<size_t>(cfg_.batch_size, data.size())
                        : data.size();
  batch.reserve(bs);
  for (size_t k = 0; k < bs; ++k) {
    const FlowExample& ex =
        cfg_.batch_size > 0 ? data[uniform_index(rng_, data.size())] : data[k];
    LatentVec x1(net_.latent_dim);
    for (double& v : x1) v = normal01(rng_);
    batch.push_back(make_flow_tuple(ex.x0, std::move(x1), uniform01(rng_), ex.h));
  }

  auto [loss, grad] = fm_loss_grad(net_, batch);
  if (cfg_.adam) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++adam_t_;
    const double corr1 = 1.0 - std::pow(b1, adam_t_);
    const double corr2 = 1.0 - std::pow(b2, adam_t_);
    for (size_t i = 0; i < grad.size(); ++i) {
      adam_m_[i] = b1 * adam_m_[i] + (1.0 - b1) * grad[i];
      adam_v_[i] = b2 * adam_v_[i] + (1.0 - b2) * grad[i] * grad[i];
      net_.params[i] -= cfg_.lr * (adam_m_[i] / corr1) /
                        (std::sqrt(adam_v_[i] / corr2) + eps);
    }
  } else {
    for (size_t i = 0; i < grad.size(); ++i) net_.params[i] -= cfg_.lr * grad[i];
  }
  if (!all_finite(net_.params)) {
    throw std::logic_error("editor update produced non-finite parameters");
  }
  return loss;
}

std::vector<double> EditorTrainer::run(std::span<const FlowExample> data) {
  std::vector<double> losses;
  losses.reserve(cfg_.steps);
  for (int s = 0; s < cfg_.steps; ++s) losses.push_back(step(data));
  return losses;
}

LatentVec sample_ode(const VelocityNet& net, const LatentVec& h, int steps,
                     Rng& rng) {
  LatentVec x(net.latent_dim);
  for (double& v : x) v = normal01(rng);
  const double dt = 1.0 / static_cast<double>(steps);
  for (int m = 0; m < steps; ++m) {
    const double t = static_cast<double>(m) * dt;
    const LatentVec v = net.forward(x, t, h);
    for (int k = 0; k < net.latent_dim; ++k) x[k] += dt * v[k];
  }
  return x;
}

namespace {
constexpr const char* kEditorFormat = "planedit-editor-v1";
}

std::string editor_to_json(const VelocityNet& net, const EncoderConfig& enc,
                           uint64_t vocab_hash) {
  nlohmann::json j{
      {"format", kEditorFormat},
      {"latent_dim", net.latent_dim},
      {"cond_dim", net.cond_dim},
      {"hidden", net.hidden},
      {"params", net.params},
      {"encoder",
       {{"num_prompts", enc.num_prompts},
        {"hash_buckets", enc.hash_buckets},
        {"out_dim", enc.out_dim},
        {"seed", enc.seed}}},
      {"vocab_hash", vocab_hash},
  };
  return j.dump();
}

EditorCheckpoint editor_from_json(const std::string& text,
                                  uint64_t expected_vocab_hash) {
  const auto j = nlohmann::json::parse(text);
  if (j.value("format", "") != kEditorFormat) {
    throw CheckpointMismatchError("not an editor checkpoint (bad format tag)");
  }
  EditorCheckpoint ck;
  ck.net.latent_dim = j.at("latent_dim").get<int>();
  ck.net.cond_dim = j.at("cond_dim").get<int>();
  ck.net.hidden = j.at("hidden").get<int>();
  ck.net.params = j.at("params").get<std::vector<double>>();
  const auto& enc = j.at("encoder");
  ck.encoder.num_prompts = enc.at("num_prompts").get<int>();
  ck.encoder.hash_buckets = enc.at("hash_buckets").get<int>();
  ck.encoder.out_dim = enc.at("out_dim").get<int>();
  ck.encoder.seed = enc.at("seed").get<uint64_t>();
  ck.vocab_hash = j.at("vocab_hash").get<uint64_t>();
  if (ck.net.params.size() != ck.net.param_count()) {
    throw CheckpointMismatchError("editor checkpoint has wrong param count");
  }
  if (expected_vocab_hash != 0 && ck.vocab_hash != expected_vocab_hash) {
    throw CheckpointMismatchError(
        "editor checkpoint was trained against a different vocabulary");
  }
  return ck;
}

void save_editor(const std::string& path, const VelocityNet& net,
                 const EncoderConfig& enc, uint64_t vocab_hash) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write checkpoint: " + path);
  os << editor_to_json(net, enc, vocab_hash);
}

EditorCheckpoint load_editor(const std::string& path,
                             uint64_t expected_vocab_hash) {
  std::ifstream is(path);
  if (!is) throw CheckpointMismatchError("cannot read checkpoint: " + path);
  std::string text((std::istreambuf_iterator<char>(is)),
                   std::istreambuf_iterator<char>());
  return editor_from_json(text, expected_vocab_hash);
}

}  // namespace planedit
