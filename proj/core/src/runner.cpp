#include "planedit/runner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "planedit/remote_oracle.hpp"
#include "planedit/util.hpp"

namespace planedit::runner {

namespace fs = std::filesystem;

RunPaths RunPaths::from(const RunConfig& cfg) {
  RunPaths p;
  p.out_dir = cfg.out_dir;
  const auto at = [&cfg](const std::string& name) {
    return (fs::path(cfg.out_dir) / name).string();
  };
  p.resolved_config = at("resolved_config.json");
  p.videos = at("videos.jsonl");
  p.profiles = at("profiles.json");
  p.pairs_all = at("pairs.jsonl");
  p.pairs_train = at("pairs_train.jsonl");
  p.pairs_test = at("pairs_test.jsonl");
  p.audit_prefix = at("audit_");
  p.policy_sft = at("policy_sft.json");
  p.policy_grpo = at("policy_grpo.json");
  p.editor = at("editor.json");
  p.editor_untrained = at("editor_untrained.json");
  p.sft_metrics = at("sft_metrics.csv");
  p.grpo_metrics = at("grpo_metrics.csv");
  p.editor_metrics = at("editor_metrics.csv");
  p.report = at("report.json");
  p.report_untrained = at("report_untrained.json");
  p.ablation = at("ablation.json");
  p.table_csv = at("results_table.csv");
  return p;
}

RunPaths prepare_run(const RunConfig& cfg) {
  RunPaths paths = RunPaths::from(cfg);
  fs::create_directories(paths.out_dir);
  save_run_config(paths.resolved_config, cfg);
  return paths;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path);
  os.precision(17);
  return os;
}

std::unique_ptr<RewardOracle> make_reward_oracle(
    const RunConfig& cfg, const Vocabulary& vocab,
    std::span<const SceneProfile> profiles) {
  if (cfg.oracle_kind == "remote") {
    return std::make_unique<RemoteRewardOracle>(cfg.remote, vocab);
  }
  std::map<int, SceneLexicon> lexicons;
  for (const SceneProfile& sp : profiles) lexicons[sp.prompt_id] = sp.lexicon;
  return std::make_unique<MockRewardOracle>(vocab, std::move(lexicons));
}

std::map<int, LatentVec> judge_targets(std::span<const SceneProfile> profiles) {
  std::map<int, LatentVec> targets;
  for (const SceneProfile& sp : profiles) {
    targets[sp.prompt_id] = sp.target_latent;
  }
  return targets;
}

PolicyParams fresh_policy(const RunConfig& cfg, const Vocabulary& vocab) {
  return PolicyParams::zeros(cfg.generator.num_prompts, vocab.size(),
                             cfg.grpo.max_len, vocab.fingerprint(),
                             cfg.bucket_width, cfg.temperature);
}

}  // namespace

GenSummary run_gen_videos(const RunConfig& cfg) {
  const RunPaths paths = prepare_run(cfg);
  const Vocabulary vocab = build_vocabulary(cfg);
  const GeneratedCorpus corpus = generate_videos(cfg.generator, vocab);
  write_videos_jsonl(paths.videos, corpus.videos);
  save_profiles(paths.profiles, corpus.profiles, vocab);
  return {corpus.videos.size(), corpus.profiles.size()};
}

MineSummary run_mine_corpus(const RunConfig& cfg, const std::string& in_path,
                            const std::string& out_path) {
  const RunPaths paths = prepare_run(cfg);
  const Vocabulary vocab = build_vocabulary(cfg);
  const auto videos =
      read_videos_jsonl(in_path.empty() ? paths.videos : in_path);
  const auto profiles = load_profiles(paths.profiles, vocab);
  CorpusOracles oracles = CorpusOracles::mocks();
  const MineResult result = mine_corpus(videos, profiles, oracles, cfg.mine);

  std::string all = paths.pairs_all, train = paths.pairs_train,
              test = paths.pairs_test;
  if (!out_path.empty()) {
    all = out_path;
    const fs::path base(out_path);
    fs::path stem = base;
    stem.replace_extension();
    train = stem.string() + "_train" + base.extension().string();
    test = stem.string() + "_test" + base.extension().string();
  }
  write_pairs_jsonl(all, result.final_pairs, vocab);
  write_pairs_jsonl(train, result.train, vocab);
  write_pairs_jsonl(test, result.test, vocab);
  for (const auto& [stage, drops] : result.drops) {
    write_drops_jsonl(paths.audit_prefix + stage + ".jsonl", drops);
  }

  MineSummary s;
  s.videos_in = result.videos_in;
  s.videos_kept = result.videos_kept;
  s.coarse = result.coarse_pairs;
  s.final_pairs = result.final_pairs.size();
  s.train = result.train.size();
  s.test = result.test.size();
  return s;
}

SftSummary run_train_sft(const RunConfig& cfg) {
  const RunPaths paths = prepare_run(cfg);
  const Vocabulary vocab = build_vocabulary(cfg);
  const auto pairs = read_pairs_jsonl(paths.pairs_train, vocab);
  const auto dataset = sft_examples_from_pairs(pairs);

  SftTrainer trainer(fresh_policy(cfg, vocab), cfg.sft, vocab);
  const auto metrics = trainer.train(dataset);
  save_policy(paths.policy_sft, trainer.params());

  auto os = open_out(paths.sft_metrics);
  os << "# config_hash=" << cfg.hash() << '\n'
     << "# loss is the per-example NLL averaged over the dataset\n"
     << "step,loss,format_validity,lr\n";
  for (const auto& row : metrics) {
    os << row.step << ',' << row.loss << ',' << row.format_validity << ','
       << row.lr << '\n';
  }

  SftSummary s;
  if (!metrics.empty()) {
    s.final_loss = metrics.back().loss;
    s.format_validity = metrics.back().format_validity;
  }
  return s;
}

GrpoSummary run_train_grpo(const RunConfig& cfg) {
  const RunPaths paths = prepare_run(cfg);
  const Vocabulary vocab = build_vocabulary(cfg);
  const auto profiles = load_profiles(paths.profiles, vocab);

  // The SFT checkpoint is both the starting point and the frozen reference.
  const PolicyParams start = load_policy(paths.policy_sft, vocab.fingerprint());

  GrpoTask task;
  for (const SceneProfile& sp : profiles) {
    task.prompt_ids.push_back(sp.prompt_id);
    task.references[sp.prompt_id] = sp.plan;
  }
  auto oracle = make_reward_oracle(cfg, vocab, profiles);
  GrpoTrainer trainer(start, start, std::move(task), *oracle, cfg.weights,
                      vocab, cfg.grpo);
  GrpoSummary s;
  s.reports = trainer.run();
  save_policy(paths.policy_grpo, trainer.params());

  auto os = open_out(paths.grpo_metrics);
  os << "# config_hash=" << cfg.hash() << '\n'
     << "step,prompt_id,mean_reward,format_rate,mean_alignment,"
        "mean_creativity,mean_kl,objective\n";
  for (const auto& r : s.reports) {
    os << r.step << ',' << r.prompt_id << ',' << r.mean_reward << ','
       << r.format_rate << ',' << r.mean_alignment << ',' << r.mean_creativity
       << ',' << r.mean_kl << ',' << r.objective << '\n';
  }
  return s;
}

EditorSummary run_train_editor(const RunConfig& cfg) {
  const RunPaths paths = prepare_run(cfg);
  const Vocabulary vocab = build_vocabulary(cfg);
  const auto pairs = read_pairs_jsonl(paths.pairs_train, vocab);

  const PlanEncoder encoder(cfg.encoder);
  const auto dataset = flow_examples_from_pairs(pairs, encoder, vocab);

  VelocityNet net =
      VelocityNet::init(cfg.generator.latent_dim, cfg.encoder.out_dim,
                        cfg.editor_hidden, cfg.editor.seed);
  save_editor(paths.editor_untrained, net, cfg.encoder, vocab.fingerprint());

  EditorTrainer trainer(std::move(net), cfg.editor);
  const auto losses = trainer.run(dataset);
  save_editor(paths.editor, trainer.net(), cfg.encoder, vocab.fingerprint());

  auto os = open_out(paths.editor_metrics);
  os << "# config_hash=" << cfg.hash() << '\n' << "step,loss\n";
  for (size_t i = 0; i < losses.size(); ++i) {
    if (i % 25 == 0 || i + 1 == losses.size()) {
      os << i << ',' << losses[i] << '\n';
    }
  }

  EditorSummary s;
  if (!losses.empty()) {
    s.first_loss = losses.front();
    s.final_loss = losses.back();
  }
  return s;
}

namespace {

// Optional human-study results: a CSV whose header names two columns,
// human_win_vs_poor and human_win_vs_good, with one data row.
void apply_human_csv(EvalReport& report, const std::string& path) {
  if (path.empty()) return;
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read human study csv: " + path);
  std::string header, row;
  if (!std::getline(is, header) || !std::getline(is, row)) {
    throw ConfigError("human study csv needs a header and one data row");
  }
  std::vector<std::string> names, cells;
  for (std::string* line : {&header, &row}) {
    std::vector<std::string>& out = line == &header ? names : cells;
    std::stringstream ss(*line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
  }
  if (names.size() != cells.size()) {
    throw ConfigError("human study csv header/row width mismatch");
  }
  for (size_t i = 0; i < names.size(); ++i) {
    if (names[i] == "human_win_vs_poor") {
      report.human_win_vs_poor = std::stod(cells[i]);
    } else if (names[i] == "human_win_vs_good") {
      report.human_win_vs_good = std::stod(cells[i]);
    }
  }
}

void append_table_row(const std::string& path, const std::string& setting,
                      const EvalReport& r) {
  const bool fresh = !fs::exists(path);
  std::ofstream os(path, std::ios::app);
  if (!os) throw ConfigError("cannot write " + path);
  os.precision(17);
  if (fresh) {
    os << "setting,win_vs_poor,win_vs_good";
    for (const auto& [name, _] : r.scores.means) os << ',' << name;
    os << ",human_vs_poor,human_vs_good\n";
  }
  os << setting << ',' << r.win_rate_vs_poor << ',' << r.win_rate_vs_good;
  for (const auto& [_, mean] : r.scores.means) os << ',' << mean;
  os << ',' << (r.human_win_vs_poor ? std::to_string(*r.human_win_vs_poor) : "")
     << ',' << (r.human_win_vs_good ? std::to_string(*r.human_win_vs_good) : "")
     << '\n';
}

}  // namespace

EvalReport run_evaluate(const RunConfig& cfg, const std::string& policy_path,
                        const std::string& editor_path,
                        const std::string& report_path, bool shuffle_plans,
                        const std::string& human_csv,
                        const std::string& pairs_path) {
  const RunPaths paths = prepare_run(cfg);
  const Vocabulary vocab = build_vocabulary(cfg);
  const auto profiles = load_profiles(paths.profiles, vocab);
  const auto pairs =
      read_pairs_jsonl(pairs_path.empty() ? paths.pairs_test : pairs_path, vocab);

  const PolicyParams policy = load_policy(
      policy_path.empty() ? paths.policy_grpo : policy_path,
      vocab.fingerprint());
  const EditorCheckpoint editor = load_editor(
      editor_path.empty() ? paths.editor : editor_path, vocab.fingerprint());
  const PlanEncoder encoder(editor.encoder);

  const auto targets = judge_targets(profiles);
  MockDistanceJudge judge("judge", targets);
  auto scorer_owners = make_mock_scorers(targets);
  std::vector<JudgeOracle*> scorers;
  for (auto& s : scorer_owners) scorers.push_back(s.get());

  EvalConfig ecfg = cfg.eval;
  ecfg.shuffle_plans = shuffle_plans;
  EvalReport report = evaluate_pairs(policy, editor.net, encoder, vocab, pairs,
                                     judge, scorers, ecfg);
  apply_human_csv(report, human_csv);

  if (!report_path.empty()) {
    auto os = open_out(report_path);
    os << eval_report_to_json(report, cfg.hash()) << '\n';
  }
  append_table_row(paths.table_csv,
                   shuffle_plans ? "shuffled-plans" : "ordered-plans", report);
  return report;
}

AblateSummary run_ablate(const RunConfig& cfg) {
  const RunPaths paths = RunPaths::from(cfg);
  AblateSummary s;
  s.ordered = run_evaluate(cfg, "", "", paths.report, false);
  s.shuffled = run_evaluate(cfg, "", "", "", true);
  s.delta_win_vs_poor =
      s.ordered.win_rate_vs_poor - s.shuffled.win_rate_vs_poor;

  auto os = open_out(paths.ablation);
  nlohmann::json j{
      {"ordered", nlohmann::json::parse(eval_report_to_json(s.ordered, cfg.hash()))},
      {"shuffled",
       nlohmann::json::parse(eval_report_to_json(s.shuffled, cfg.hash()))},
      {"delta_win_vs_poor", s.delta_win_vs_poor},
  };
  os << j.dump(2) << '\n';
  return s;
}

std::string run_edit(const RunConfig& cfg, int prompt,
                     const std::string& plan_line, uint64_t edit_seed) {
  const RunPaths paths = RunPaths::from(cfg);
  const Vocabulary vocab = build_vocabulary(cfg);
  const EditorCheckpoint editor = load_editor(paths.editor, vocab.fingerprint());
  const PlanEncoder encoder(editor.encoder);

  const std::vector<TokenId> tokens = line_to_tokens(plan_line, vocab);
  const bool valid = format_reward(tokens, vocab) == 1;
  const LatentVec h = encoder.encode(prompt, tokens, vocab);
  Rng rng(mix_seed(edit_seed, fnv1a64("edit-cli")));
  const LatentVec latent = sample_ode(editor.net, h, cfg.ode_steps, rng);

  nlohmann::json j{
      {"prompt_id", prompt},
      {"plan_valid", valid},
      {"latent", latent},
      {"config_hash", cfg.hash()},
  };
  // Nearest-target diagnostic when profiles are available.
  if (fs::exists(paths.profiles)) {
    const auto profiles = load_profiles(paths.profiles, vocab);
    int best = -1;
    double best_d = 0.0;
    for (const SceneProfile& sp : profiles) {
      double acc = 0.0;
      for (size_t i = 0; i < latent.size(); ++i) {
        const double d = latent[i] - sp.target_latent[i];
        acc += d * d;
      }
      const double dist = std::sqrt(acc);
      if (best < 0 || dist < best_d) {
        best = sp.prompt_id;
        best_d = dist;
      }
    }
    j["nearest_target_prompt"] = best;
    j["nearest_target_distance"] = best_d;
  }
  return j.dump(2);
}

}  // namespace planedit::runner
