#pragma once

// High-level run steps shared by the CLI and the acceptance suite. Each step
// reads its inputs from the run directory, writes its artifacts there, and
// stamps everything with the resolved config hash.

#include <string>

#include "planedit/config.hpp"
#include "planedit/eval.hpp"
#include "planedit/grpo.hpp"

namespace planedit::runner {

struct RunPaths {
  std::string out_dir;
  std::string resolved_config;
  std::string videos;
  std::string profiles;
  std::string pairs_all, pairs_train, pairs_test;
  std::string audit_prefix;  // audit_<stage>.jsonl
  std::string policy_sft, policy_grpo;
  std::string editor, editor_untrained;
  std::string sft_metrics, grpo_metrics, editor_metrics;
  std::string report, report_untrained, ablation, table_csv;

  static RunPaths from(const RunConfig& cfg);
};

// Creates the run directory and writes the resolved config beside the
// artifacts. Every step calls this; it is idempotent.
RunPaths prepare_run(const RunConfig& cfg);

struct GenSummary {
  size_t videos = 0;
  size_t profiles = 0;
};
GenSummary run_gen_videos(const RunConfig& cfg);

struct MineSummary {
  size_t videos_in = 0, videos_kept = 0;
  size_t coarse = 0, final_pairs = 0, train = 0, test = 0;
};
// in_path / out_path default to the run directory's videos.jsonl and
// pairs.jsonl; the train/test splits always sit beside out_path.
MineSummary run_mine_corpus(const RunConfig& cfg,
                            const std::string& in_path = "",
                            const std::string& out_path = "");

struct SftSummary {
  double final_loss = 0.0;
  double format_validity = 0.0;
};
SftSummary run_train_sft(const RunConfig& cfg);

struct GrpoSummary {
  std::vector<StepReport> reports;
};
GrpoSummary run_train_grpo(const RunConfig& cfg);

struct EditorSummary {
  double first_loss = 0.0;
  double final_loss = 0.0;
};
EditorSummary run_train_editor(const RunConfig& cfg);

// policy/editor/pairs paths default to this run's trained checkpoints and
// test split; human_csv optionally fills the human-study columns.
EvalReport run_evaluate(const RunConfig& cfg, const std::string& policy_path,
                        const std::string& editor_path,
                        const std::string& report_path, bool shuffle_plans,
                        const std::string& human_csv = "",
                        const std::string& pairs_path = "");

struct AblateSummary {
  EvalReport ordered;
  EvalReport shuffled;
  double delta_win_vs_poor = 0.0;  // ordered - shuffled
};
AblateSummary run_ablate(const RunConfig& cfg);

// Runs the editor on one (prompt, plan) and returns a JSON diagnostic with
// the sampled latent and its nearest profile target.
std::string run_edit(const RunConfig& cfg, int prompt,
                     const std::string& plan_line, uint64_t edit_seed);

}  // namespace planedit::runner
