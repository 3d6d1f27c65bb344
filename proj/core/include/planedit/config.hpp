#pragma once

// Run configuration: one structure binding every subsystem's knobs, JSON
// round-trippable. resolve() derives per-subsystem seeds from the run seed
// and propagates shared dimensions; the resolved form is what gets hashed
// and written beside every artifact.

#include <cstdint>
#include <string>
#include <vector>

#include "planedit/corpus.hpp"
#include "planedit/eval.hpp"
#include "planedit/flow.hpp"
#include "planedit/grpo.hpp"
#include "planedit/remote_oracle.hpp"
#include "planedit/sft.hpp"

namespace planedit {

struct RunConfig {
  uint64_t seed = 7;
  std::string out_dir = "run";
  int parallelism = 1;

  std::vector<std::string> extra_content_tokens;
  int bucket_width = 4;
  double temperature = 1.0;

  GeneratorConfig generator;
  MineConfig mine;
  SftConfig sft;
  GrpoConfig grpo;
  RewardWeights weights;
  std::string oracle_kind = "mock";  // "mock" | "remote"
  RemoteOracleConfig remote;

  EncoderConfig encoder;
  int editor_hidden = 64;
  EditorTrainConfig editor;
  int ode_steps = 50;
  EvalConfig eval;

  // Derives sub-seeds from the run seed, threads parallelism and shared
  // dimensions through, and validates. Throws ConfigError.
  void resolve();
  uint64_t hash() const;  // over the canonical resolved JSON
};

std::string run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const std::string& text);  // missing keys keep defaults
RunConfig load_run_config(const std::string& path);
void save_run_config(const std::string& path, const RunConfig& cfg);

Vocabulary build_vocabulary(const RunConfig& cfg);

}  // namespace planedit
