#include "planedit/config.hpp"

#include <fstream>
#include <json.hpp>

#include "planedit/util.hpp"

namespace planedit {

void RunConfig::resolve() {
  generator.seed = mix_seed(seed, fnv1a64("generator"));
  mine.seed = mix_seed(seed, fnv1a64("mine"));
  sft.seed = mix_seed(seed, fnv1a64("sft"));
  grpo.seed = mix_seed(seed, fnv1a64("grpo"));
  editor.seed = mix_seed(seed, fnv1a64("editor"));
  encoder.seed = mix_seed(seed, fnv1a64("encoder"));
  eval.seed = mix_seed(seed, fnv1a64("eval"));

  encoder.num_prompts = generator.num_prompts;
  grpo.parallelism = parallelism;
  eval.parallelism = parallelism;
  eval.ode_steps = ode_steps;
  eval.max_len = grpo.max_len;

  if (!generator.valid()) {
    throw ConfigError("generator configuration is infeasible");
  }
  if (mine.test_count < 0) throw ConfigError("test_count must be >= 0");
  if (grpo.group_size < 2) throw ConfigError("grpo group_size must be >= 2");
  if (sft.lr <= 0 || grpo.lr <= 0 || editor.lr <= 0) {
    throw ConfigError("learning rates must be positive");
  }
  if (weights.format < 0 || weights.alignment < 0 || weights.creativity < 0) {
    throw ConfigError("reward weights must be non-negative");
  }
  if (oracle_kind != "mock" && oracle_kind != "remote") {
    throw ConfigError("oracle kind must be mock or remote");
  }
  if (oracle_kind == "remote" && remote.endpoint.empty()) {
    throw ConfigError("remote oracle selected but endpoint is empty");
  }
  if (ode_steps < 1) throw ConfigError("ode_steps must be >= 1");
}

std::string run_config_to_json(const RunConfig& c) {
  nlohmann::json j{
      {"seed", c.seed},
      {"out_dir", c.out_dir},
      {"parallelism", c.parallelism},
      {"vocabulary", {{"extra_content_tokens", c.extra_content_tokens}}},
      {"policy",
       {{"bucket_width", c.bucket_width}, {"temperature", c.temperature}}},
      {"generator",
       {{"total_videos", c.generator.total_videos},
        {"duplicate_videos", c.generator.duplicate_videos},
        {"kept_videos", c.generator.kept_videos},
        {"final_pairs", c.generator.final_pairs},
        {"num_prompts", c.generator.num_prompts},
        {"latent_dim", c.generator.latent_dim},
        {"drops",
         {{"quality", c.generator.drop_quality},
          {"aesthetic", c.generator.drop_aesthetic},
          {"artifact", c.generator.drop_artifact},
          {"overlay", c.generator.drop_overlay},
          {"scene_change", c.generator.drop_scene_change},
          {"identity", c.generator.drop_identity},
          {"new_object", c.generator.drop_new_object},
          {"cross_event", c.generator.drop_cross_event},
          {"poor_equals_good", c.generator.drop_poor_equals_good}}}}},
      {"mine",
       {{"quality_threshold", c.mine.thresholds.quality},
        {"aesthetic_threshold", c.mine.thresholds.aesthetic},
        {"max_overlay_retries", c.mine.max_overlay_retries},
        {"test_count", c.mine.test_count}}},
      {"sft",
       {{"lr", c.sft.lr},
        {"steps", c.sft.steps},
        {"batch_size", c.sft.batch_size},
        {"backtracking", c.sft.backtracking},
        {"metrics_every", c.sft.metrics_every}}},
      {"grpo",
       {{"group_size", c.grpo.group_size},
        {"beta", c.grpo.beta},
        {"lr", c.grpo.lr},
        {"steps", c.grpo.steps},
        {"std_epsilon", c.grpo.std_epsilon},
        {"max_len", c.grpo.max_len}}},
      {"reward",
       {{"lambda_format", c.weights.format},
        {"lambda_alignment", c.weights.alignment},
        {"lambda_creativity", c.weights.creativity},
        {"oracle", c.oracle_kind},
        {"remote",
         {{"endpoint", c.remote.endpoint},
          {"timeout_ms", c.remote.timeout_ms},
          {"max_retries", c.remote.max_retries},
          {"initial_backoff_ms", c.remote.initial_backoff_ms}}}}},
      {"editor",
       {{"hidden", c.editor_hidden},
        {"steps", c.editor.steps},
        {"batch_size", c.editor.batch_size},
        {"lr", c.editor.lr},
        {"adam", c.editor.adam},
        {"encoder_dim", c.encoder.out_dim},
        {"hash_buckets", c.encoder.hash_buckets},
        {"ode_steps", c.ode_steps}}},
      {"eval",
       {{"max_samples", c.eval.max_samples},
        {"bootstrap_resamples", c.eval.bootstrap_resamples}}},
  };
  return j.dump(2);
}

RunConfig run_config_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  RunConfig c;
  c.seed = j.value("seed", c.seed);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.parallelism = j.value("parallelism", c.parallelism);

  if (j.contains("vocabulary")) {
    c.extra_content_tokens = j.at("vocabulary").value(
        "extra_content_tokens", c.extra_content_tokens);
  }
  if (j.contains("policy")) {
    const auto& p = j.at("policy");
    c.bucket_width = p.value("bucket_width", c.bucket_width);
    c.temperature = p.value("temperature", c.temperature);
  }
  if (j.contains("generator")) {
    const auto& g = j.at("generator");
    c.generator.total_videos = g.value("total_videos", c.generator.total_videos);
    c.generator.duplicate_videos =
        g.value("duplicate_videos", c.generator.duplicate_videos);
    c.generator.kept_videos = g.value("kept_videos", c.generator.kept_videos);
    c.generator.final_pairs = g.value("final_pairs", c.generator.final_pairs);
    c.generator.num_prompts = g.value("num_prompts", c.generator.num_prompts);
    c.generator.latent_dim = g.value("latent_dim", c.generator.latent_dim);
    if (g.contains("drops")) {
      const auto& d = g.at("drops");
      c.generator.drop_quality = d.value("quality", c.generator.drop_quality);
      c.generator.drop_aesthetic =
          d.value("aesthetic", c.generator.drop_aesthetic);
      c.generator.drop_artifact = d.value("artifact", c.generator.drop_artifact);
      c.generator.drop_overlay = d.value("overlay", c.generator.drop_overlay);
      c.generator.drop_scene_change =
          d.value("scene_change", c.generator.drop_scene_change);
      c.generator.drop_identity = d.value("identity", c.generator.drop_identity);
      c.generator.drop_new_object =
          d.value("new_object", c.generator.drop_new_object);
      c.generator.drop_cross_event =
          d.value("cross_event", c.generator.drop_cross_event);
      c.generator.drop_poor_equals_good =
          d.value("poor_equals_good", c.generator.drop_poor_equals_good);
    }
  }
  if (j.contains("mine")) {
    const auto& m = j.at("mine");
    c.mine.thresholds.quality =
        m.value("quality_threshold", c.mine.thresholds.quality);
    c.mine.thresholds.aesthetic =
        m.value("aesthetic_threshold", c.mine.thresholds.aesthetic);
    c.mine.max_overlay_retries =
        m.value("max_overlay_retries", c.mine.max_overlay_retries);
    c.mine.test_count = m.value("test_count", c.mine.test_count);
  }
  if (j.contains("sft")) {
    const auto& s = j.at("sft");
    c.sft.lr = s.value("lr", c.sft.lr);
    c.sft.steps = s.value("steps", c.sft.steps);
    c.sft.batch_size = s.value("batch_size", c.sft.batch_size);
    c.sft.backtracking = s.value("backtracking", c.sft.backtracking);
    c.sft.metrics_every = s.value("metrics_every", c.sft.metrics_every);
  }
  if (j.contains("grpo")) {
    const auto& g = j.at("grpo");
    c.grpo.group_size = g.value("group_size", c.grpo.group_size);
    c.grpo.beta = g.value("beta", c.grpo.beta);
    c.grpo.lr = g.value("lr", c.grpo.lr);
    c.grpo.steps = g.value("steps", c.grpo.steps);
    c.grpo.std_epsilon = g.value("std_epsilon", c.grpo.std_epsilon);
    c.grpo.max_len = g.value("max_len", c.grpo.max_len);
  }
  if (j.contains("reward")) {
    const auto& r = j.at("reward");
    c.weights.format = r.value("lambda_format", c.weights.format);
    c.weights.alignment = r.value("lambda_alignment", c.weights.alignment);
    c.weights.creativity = r.value("lambda_creativity", c.weights.creativity);
    c.oracle_kind = r.value("oracle", c.oracle_kind);
    if (r.contains("remote")) {
      const auto& rm = r.at("remote");
      c.remote.endpoint = rm.value("endpoint", c.remote.endpoint);
      c.remote.timeout_ms = rm.value("timeout_ms", c.remote.timeout_ms);
      c.remote.max_retries = rm.value("max_retries", c.remote.max_retries);
      c.remote.initial_backoff_ms =
          rm.value("initial_backoff_ms", c.remote.initial_backoff_ms);
    }
  }
  if (j.contains("editor")) {
    const auto& e = j.at("editor");
    c.editor_hidden = e.value("hidden", c.editor_hidden);
    c.editor.steps = e.value("steps", c.editor.steps);
    c.editor.batch_size = e.value("batch_size", c.editor.batch_size);
    c.editor.lr = e.value("lr", c.editor.lr);
    c.editor.adam = e.value("adam", c.editor.adam);
    c.encoder.out_dim = e.value("encoder_dim", c.encoder.out_dim);
    c.encoder.hash_buckets = e.value("hash_buckets", c.encoder.hash_buckets);
    c.ode_steps = e.value("ode_steps", c.ode_steps);
  }
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    c.eval.max_samples = e.value("max_samples", c.eval.max_samples);
    c.eval.bootstrap_resamples =
        e.value("bootstrap_resamples", c.eval.bootstrap_resamples);
  }
  return c;
}

uint64_t RunConfig::hash() const {
  // The hash identifies what a run computes, not where it writes.
  RunConfig copy = *this;
  copy.out_dir.clear();
  return fnv1a64(run_config_to_json(copy));
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config: " + path);
  std::string text((std::istreambuf_iterator<char>(is)),
                   std::istreambuf_iterator<char>());
  try {
    return run_config_from_json(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
}

void save_run_config(const std::string& path, const RunConfig& cfg) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write config: " + path);
  os << run_config_to_json(cfg) << '\n';
}

Vocabulary build_vocabulary(const RunConfig& cfg) {
  std::vector<std::string> content;
  for (const auto& lex : dimension_lexicons()) {
    content.insert(content.end(), lex.begin(), lex.end());
  }
  const auto& forbidden = forbidden_token_spellings();
  content.insert(content.end(), forbidden.begin(), forbidden.end());
  content.insert(content.end(), cfg.extra_content_tokens.begin(),
                 cfg.extra_content_tokens.end());
  return Vocabulary(content);
}

}  // namespace planedit
