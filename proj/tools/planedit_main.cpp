// planedit: plan-then-edit training stack driver.
//
// Subcommands cover the whole pipeline: synthesize tutorial videos, mine the
// pair corpus, train the planner (SFT then GRPO), train the editor, run
// single edits, evaluate, and run the plan-order ablation.
//
// Exit codes: 0 ok, 2 invalid config/usage, 3 checkpoint mismatch,
// 4 reward oracle unavailable, 1 anything else.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "planedit/config.hpp"
#include "planedit/runner.hpp"

namespace {

using planedit::RunConfig;

struct CommonFlags {
  std::string config_path;
  // Flag presence tracked so flags win over the config file.
  uint64_t seed = 0;
  std::string out_dir;
  int parallelism = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "run config JSON");
  cmd->add_option("--seed", flags.seed, "override the run seed");
  cmd->add_option("--out-dir", flags.out_dir, "override the run directory");
  cmd->add_option("--parallelism", flags.parallelism,
                  "worker bound for sampling/scoring/eval");
}

RunConfig resolve_config(const CLI::App* cmd, const CommonFlags& flags) {
  RunConfig cfg;
  if (!flags.config_path.empty()) {
    cfg = planedit::load_run_config(flags.config_path);
  }
  if (cmd->count("--seed") > 0) cfg.seed = flags.seed;
  if (cmd->count("--out-dir") > 0) cfg.out_dir = flags.out_dir;
  if (cmd->count("--parallelism") > 0) cfg.parallelism = flags.parallelism;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"plan-then-edit training stack"};
  app.require_subcommand(1);

  CommonFlags flags;

  auto* gen = app.add_subcommand("gen-videos",
                                 "synthesize the tutorial-video corpus");
  add_common(gen, flags);

  auto* mine =
      app.add_subcommand("mine-corpus", "mine aligned pairs from videos");
  add_common(mine, flags);
  std::string mine_in, mine_out;
  double tq = -1.0, ta = -1.0;
  int test_count = -1;
  mine->add_option("--in", mine_in, "videos JSONL (default: run dir)");
  mine->add_option("--out", mine_out, "pairs JSONL (default: run dir)");
  mine->add_option("--tq", tq, "quality threshold (inclusive)");
  mine->add_option("--ta", ta, "aesthetic threshold (inclusive)");
  mine->add_option("--test-count", test_count, "test split size");

  auto* sft = app.add_subcommand("train-sft", "cold-start the planner");
  add_common(sft, flags);

  auto* grpo = app.add_subcommand(
      "train-grpo", "group-relative policy optimization from the SFT checkpoint");
  add_common(grpo, flags);

  auto* editor = app.add_subcommand("train-editor",
                                    "train the action-conditioned editor");
  add_common(editor, flags);

  auto* edit = app.add_subcommand("edit", "run one conditioned edit");
  add_common(edit, flags);
  int edit_prompt = 0;
  std::string plan_file;
  uint64_t edit_seed = 1;
  edit->add_option("--prompt", edit_prompt, "prompt id")->required();
  edit->add_option("--plan", plan_file, "plan file, one line of tokens")
      ->required();
  edit->add_option("--edit-seed", edit_seed, "noise seed for the edit");

  auto* evaluate = app.add_subcommand("evaluate", "pairwise win-rate report");
  add_common(evaluate, flags);
  std::string eval_policy, eval_editor, eval_pairs, eval_report, human_csv;
  evaluate->add_option("--policy", eval_policy,
                       "planner checkpoint (default: run dir GRPO)");
  evaluate->add_option("--editor", eval_editor,
                       "editor checkpoint (default: run dir)");
  evaluate->add_option("--pairs", eval_pairs,
                       "pairs JSONL (default: run dir test split)");
  evaluate->add_option("--report", eval_report,
                       "report path (default: run dir report.json)");
  evaluate->add_option("--human-csv", human_csv,
                       "external human-study results CSV");

  auto* ablate = app.add_subcommand(
      "ablate-shuffle", "compare ordered plans against shuffled plans");
  add_common(ablate, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      RunConfig cfg = resolve_config(gen, flags);
      cfg.resolve();
      const auto s = planedit::runner::run_gen_videos(cfg);
      std::cout << "videos=" << s.videos << " profiles=" << s.profiles << '\n';
    } else if (mine->parsed()) {
      RunConfig cfg = resolve_config(mine, flags);
      if (mine->count("--tq") > 0) cfg.mine.thresholds.quality = tq;
      if (mine->count("--ta") > 0) cfg.mine.thresholds.aesthetic = ta;
      if (mine->count("--test-count") > 0) cfg.mine.test_count = test_count;
      cfg.resolve();
      const auto s = planedit::runner::run_mine_corpus(cfg, mine_in, mine_out);
      std::cout << "videos_in=" << s.videos_in << " kept=" << s.videos_kept
                << " coarse=" << s.coarse << " final=" << s.final_pairs
                << " train=" << s.train << " test=" << s.test << '\n';
    } else if (sft->parsed()) {
      RunConfig cfg = resolve_config(sft, flags);
      cfg.resolve();
      const auto s = planedit::runner::run_train_sft(cfg);
      std::cout << "final_loss=" << s.final_loss
                << " format_validity=" << s.format_validity << '\n';
    } else if (grpo->parsed()) {
      RunConfig cfg = resolve_config(grpo, flags);
      cfg.resolve();
      const auto s = planedit::runner::run_train_grpo(cfg);
      if (!s.reports.empty()) {
        std::cout << "steps=" << s.reports.size()
                  << " final_mean_reward=" << s.reports.back().mean_reward
                  << " final_format_rate=" << s.reports.back().format_rate
                  << '\n';
      }
    } else if (editor->parsed()) {
      RunConfig cfg = resolve_config(editor, flags);
      cfg.resolve();
      const auto s = planedit::runner::run_train_editor(cfg);
      std::cout << "first_loss=" << s.first_loss
                << " final_loss=" << s.final_loss << '\n';
    } else if (edit->parsed()) {
      RunConfig cfg = resolve_config(edit, flags);
      cfg.resolve();
      std::ifstream is(plan_file);
      if (!is) throw planedit::ConfigError("cannot read plan: " + plan_file);
      std::string line;
      std::getline(is, line);
      std::cout << planedit::runner::run_edit(cfg, edit_prompt, line, edit_seed)
                << '\n';
    } else if (evaluate->parsed()) {
      RunConfig cfg = resolve_config(evaluate, flags);
      cfg.resolve();
      const std::string report_path =
          evaluate->count("--report") > 0
              ? eval_report
              : planedit::runner::RunPaths::from(cfg).report;
      const auto r = planedit::runner::run_evaluate(
          cfg, eval_policy, eval_editor, report_path, false, human_csv,
          eval_pairs);
      std::cout << "win_vs_poor=" << r.win_rate_vs_poor
                << " win_vs_good=" << r.win_rate_vs_good
                << " format_valid_rate=" << r.format_valid_rate << '\n';
    } else if (ablate->parsed()) {
      RunConfig cfg = resolve_config(ablate, flags);
      cfg.resolve();
      const auto s = planedit::runner::run_ablate(cfg);
      std::cout << "ordered_win_vs_poor=" << s.ordered.win_rate_vs_poor
                << " shuffled_win_vs_poor=" << s.shuffled.win_rate_vs_poor
                << " delta=" << s.delta_win_vs_poor << '\n';
    }
    return 0;
  } catch (const planedit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const planedit::CheckpointMismatchError& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return 3;
  } catch (const planedit::OracleUnavailableError& e) {
    std::cerr << "oracle error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
