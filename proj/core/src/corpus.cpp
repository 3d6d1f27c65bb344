#include "planedit/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <unordered_set>

#include "planedit/util.hpp"

namespace planedit {

// ---------------------------------------------------------------------------
// Mock oracles

namespace {

struct MockScreenOracle final : ScreenOracle {
  std::optional<std::string> exclusion_reason(const VideoRecord& v) override {
    if (v.flag_ad) return "screened:ads";
    if (v.flag_irrelevant) return "screened:irrelevant";
    if (v.flag_showcase_only) return "screened:showcase-only";
    return std::nullopt;
  }
};

struct MockSegmentOracle final : SegmentOracle {
  std::vector<Segment> localize(const VideoRecord& v) override {
    return v.segments;
  }
};

struct MockGoodFrameOracle final : GoodFrameOracle {
  bool is_good(const FrameRecord& f) override { return f.is_good; }
};

struct MockQualityOracle final : FrameScoreOracle {
  double score(const FrameRecord& f) override { return f.quality_score; }
};

struct MockAestheticOracle final : FrameScoreOracle {
  double score(const FrameRecord& f) override { return f.aesthetic_score; }
};

struct MockArtifactOracle final : ArtifactOracle {
  bool has_artifact(const FrameRecord& f) override {
    return f.has_transition_artifact;
  }
};

// A failed mock edit "damages" the subject so the verifier can catch it,
// mirroring inpainting that alters underlying content.
struct MockOverlayEditor final : OverlayEditorOracle {
  FrameRecord edit(const FrameRecord& frame, int attempt) override {
    FrameRecord out = frame;
    out.has_overlay = false;
    if (attempt < frame.overlay_difficulty) out.person_id += 1000000;
    return out;
  }
};

struct MockOverlayVerifier final : OverlayVerifierOracle {
  bool verify(const FrameRecord& original, const FrameRecord& edited) override {
    return !edited.has_overlay && edited.person_id == original.person_id &&
           edited.scene_id == original.scene_id;
  }
};

struct MockPairAlignmentOracle final : PairAlignmentOracle {
  std::optional<std::string> reject_reason(const FrameRecord& poor,
                                           const FrameRecord& good) override {
    if (good.scene_id != poor.scene_id) return "scene-change";
    if (good.person_id != poor.person_id) return "identity";
    if (good.new_object) return "new-object";
    if (good.event_id != poor.event_id) return "cross-event";
    return std::nullopt;
  }
};

}  // namespace

CorpusOracles CorpusOracles::mocks() {
  CorpusOracles o;
  o.screen = std::make_unique<MockScreenOracle>();
  o.segments = std::make_unique<MockSegmentOracle>();
  o.good_frame = std::make_unique<MockGoodFrameOracle>();
  o.quality = std::make_unique<MockQualityOracle>();
  o.aesthetic = std::make_unique<MockAestheticOracle>();
  o.artifact = std::make_unique<MockArtifactOracle>();
  o.overlay_editor = std::make_unique<MockOverlayEditor>();
  o.overlay_verifier = std::make_unique<MockOverlayVerifier>();
  o.alignment = std::make_unique<MockPairAlignmentOracle>();
  return o;
}

// ---------------------------------------------------------------------------
// Stages

VideoStageResult dedup_and_screen(std::span<const VideoRecord> videos,
                                  ScreenOracle& screen) {
  VideoStageResult out;
  std::unordered_set<std::string> seen;
  for (const VideoRecord& v : videos) {
    if (!seen.insert(v.video_id).second) {
      out.drops.push_back({v.video_id, -1, "screen", "duplicate-id", 0, 0});
      continue;
    }
    if (auto reason = screen.exclusion_reason(v)) {
      out.drops.push_back({v.video_id, -1, "screen", *reason, 0, 0});
      continue;
    }
    out.kept.push_back(v);
  }
  return out;
}

std::vector<FrameRecord> sample_frames(const Segment& segment,
                                       const VideoRecord& video) {
  std::vector<size_t> inside;
  for (size_t i = 0; i < video.frames.size(); ++i) {
    const double ts = video.frames[i].timestamp;
    if (ts >= segment.start - 1e-9 && ts <= segment.end + 1e-9) {
      inside.push_back(i);
    }
  }
  if (inside.empty()) {
    throw EmptySegmentError("no frame inside segment of " + video.video_id);
  }

  const int grid_points =
      static_cast<int>(std::floor((segment.end - segment.start) / 0.5 + 1e-9)) + 1;
  std::vector<FrameRecord> out;
  size_t last_pick = static_cast<size_t>(-1);
  for (int k = 0; k < grid_points; ++k) {
    const double target = segment.start + 0.5 * k;
    size_t best = inside.front();
    double best_d = std::abs(video.frames[best].timestamp - target);
    for (size_t idx : inside) {
      const double d = std::abs(video.frames[idx].timestamp - target);
      if (d < best_d - 1e-12) {
        best = idx;
        best_d = d;
      }
    }
    if (best != last_pick) {
      out.push_back(video.frames[best]);
      last_pick = best;
    }
  }
  return out;
}

PairStageResult construct_coarse_pairs(const VideoRecord& video,
                                       std::span<const Segment> segments,
                                       GoodFrameOracle& good_oracle,
                                       const ActionPlan& actions,
                                       const std::string& text_cue) {
  PairStageResult out;
  for (size_t si = 0; si < segments.size(); ++si) {
    const auto frames = sample_frames(segments[si], video);
    const FrameRecord& poor = frames.front();
    for (const FrameRecord& f : frames) {
      if (!good_oracle.is_good(f)) continue;
      if (!(poor.timestamp < f.timestamp)) {
        out.drops.push_back({video.video_id, static_cast<int>(si), "coarse",
                             "poor-equals-good", poor.timestamp, f.timestamp});
        continue;
      }
      PairRecord pair;
      pair.video_id = video.video_id;
      pair.segment_index = static_cast<int>(si);
      pair.prompt_id = video.prompt_id;
      pair.poor = poor;
      pair.good = f;
      pair.actions = actions;
      pair.text_cue = text_cue;
      pair.audit.push_back("coarse:ok");
      out.kept.push_back(std::move(pair));
    }
  }
  return out;
}

PairStageResult filter_good_images(std::vector<PairRecord> pairs,
                                   FrameScoreOracle& quality,
                                   FrameScoreOracle& aesthetic,
                                   ArtifactOracle& artifact,
                                   const FilterThresholds& thresholds) {
  PairStageResult out;
  for (PairRecord& p : pairs) {
    const double q = quality.score(p.good);
    const double a = aesthetic.score(p.good);
    const bool art = artifact.has_artifact(p.good);
    std::string reason;
    if (q < thresholds.quality) {
      reason = "quality";
    } else if (a < thresholds.aesthetic) {
      reason = "aesthetic";
    } else if (art) {
      reason = "artifact";
    }
    if (!reason.empty()) {
      out.drops.push_back({p.video_id, p.segment_index, "good-filter", reason,
                           p.poor.timestamp, p.good.timestamp});
      continue;
    }
    std::ostringstream audit;
    audit << "good-filter:quality=" << q << ",aesthetic=" << a << ",artifact=0";
    p.audit.push_back(audit.str());
    out.kept.push_back(std::move(p));
  }
  return out;
}

PairStageResult remove_overlays(std::vector<PairRecord> pairs,
                                OverlayEditorOracle& editor,
                                OverlayVerifierOracle& verifier,
                                int max_retries) {
  PairStageResult out;
  for (PairRecord& p : pairs) {
    if (!p.poor.has_overlay) {
      p.audit.push_back("overlay:clean");
      out.kept.push_back(std::move(p));
      continue;
    }
    bool done = false;
    for (int attempt = 1; attempt <= max_retries; ++attempt) {
      FrameRecord edited = editor.edit(p.poor, attempt);
      if (verifier.verify(p.poor, edited)) {
        p.poor = std::move(edited);
        p.audit.push_back("overlay:attempts=" + std::to_string(attempt));
        done = true;
        break;
      }
    }
    if (done) {
      out.kept.push_back(std::move(p));
    } else {
      out.drops.push_back({p.video_id, p.segment_index, "overlay",
                           "overlay-verify-exhausted", p.poor.timestamp,
                           p.good.timestamp});
    }
  }
  return out;
}

PairStageResult strict_align(std::vector<PairRecord> pairs,
                             PairAlignmentOracle& alignment) {
  PairStageResult out;
  for (PairRecord& p : pairs) {
    if (auto reason = alignment.reject_reason(p.poor, p.good)) {
      out.drops.push_back({p.video_id, p.segment_index, "align", *reason,
                           p.poor.timestamp, p.good.timestamp});
      continue;
    }
    p.audit.push_back("align:ok");
    out.kept.push_back(std::move(p));
  }
  return out;
}

SplitResult split_dataset(std::vector<PairRecord> pairs, int test_count,
                          uint64_t seed) {
  if (test_count < 0 ||
      static_cast<size_t>(test_count) > pairs.size()) {
    throw TestCountTooLargeError("test_count " + std::to_string(test_count) +
                                 " exceeds corpus size " +
                                 std::to_string(pairs.size()));
  }
  std::vector<size_t> order(pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(mix_seed(seed, fnv1a64("corpus-split")));
  shuffle_in_place(order, rng);

  std::vector<bool> in_test(pairs.size(), false);
  for (int k = 0; k < test_count; ++k) in_test[order[k]] = true;

  SplitResult out;
  for (size_t i = 0; i < pairs.size(); ++i) {
    (in_test[i] ? out.test : out.train).push_back(std::move(pairs[i]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic world

const std::array<std::vector<std::string>, kNumDimensions>&
dimension_lexicons() {
  static const std::array<std::vector<std::string>, kNumDimensions> lexicons = {{
      {"ar-1x1", "ar-3x2", "ar-4x5", "ar-16x9", "ar-9x16", "ar-4x3"},
      {"rule-of-thirds", "center-weight", "golden-ratio", "diagonal-lead",
       "symmetry", "leading-lines"},
      {"eye-level", "low-angle", "high-angle", "dutch-tilt", "over-shoulder",
       "frontal"},
      {"left-third", "right-third", "center-subject", "foreground-near",
       "midground", "background-far"},
      {"relaxed-arms", "walking-step", "sitting-lean", "wall-lean",
       "look-away", "hands-pockets"},
      {"shallow-dof", "deep-dof", "focus-face", "focus-eyes", "bokeh-bg",
       "pan-blur"},
      {"warm-tone", "cool-tone", "golden-hour", "high-key", "low-key",
       "soft-light"},
  }};
  return lexicons;
}

const std::vector<std::string>& forbidden_token_spellings() {
  static const std::vector<std::string> forbidden = {
      "add-person", "add-prop", "add-pet", "add-text"};
  return forbidden;
}

Vocabulary default_vocabulary() {
  std::vector<std::string> content;
  for (const auto& lex : dimension_lexicons()) {
    content.insert(content.end(), lex.begin(), lex.end());
  }
  const auto& forbidden = forbidden_token_spellings();
  content.insert(content.end(), forbidden.begin(), forbidden.end());
  return Vocabulary(content);
}

PlanOracle::PlanOracle(const Vocabulary& vocab, uint64_t seed,
                       int max_attempts, int corrupt_attempts)
    : vocab_(&vocab),
      seed_(seed),
      max_attempts_(max_attempts),
      corrupt_attempts_(corrupt_attempts) {}

ActionPlan PlanOracle::plan_for(int prompt_id) {
  for (int attempt = 1; attempt <= max_attempts_; ++attempt) {
    Rng rng(mix_seed(seed_, static_cast<uint64_t>(prompt_id), attempt));
    std::vector<TokenId> tokens;
    if (attempt <= corrupt_attempts_) {
      // Scripted failure: emit the plan without its final dimension so the
      // verify step rejects it and the loop resamples.
      for (int dim = 1; dim < kNumDimensions; ++dim) {
        tokens.push_back(Vocabulary::open_id(dim));
        tokens.push_back(Vocabulary::close_id(dim));
      }
    } else {
      ActionPlan plan;
      for (int dim = 1; dim <= kNumDimensions; ++dim) {
        const auto& lex = dimension_lexicons()[dim - 1];
        const size_t count = 1 + uniform_index(rng, 2);  // 1 or 2 tokens
        std::vector<size_t> picks(lex.size());
        for (size_t i = 0; i < picks.size(); ++i) picks[i] = i;
        shuffle_in_place(picks, rng);
        for (size_t c = 0; c < count; ++c) {
          plan.segment(dim).push_back(vocab_->id_of(lex[picks[c]]));
        }
      }
      tokens = serialize_action_plan(plan);
    }
    if (format_reward(tokens, *vocab_) == 1) {
      return parse_action_plan(tokens, *vocab_).plan;
    }
  }
  throw InvalidTargetError("plan oracle produced no valid plan in " +
                           std::to_string(max_attempts_) + " attempts");
}

std::vector<SceneProfile> make_scene_profiles(uint64_t seed, int num_prompts,
                                              const Vocabulary& vocab,
                                              int latent_dim) {
  PlanOracle oracle(vocab, mix_seed(seed, fnv1a64("scene-plans")));
  std::vector<SceneProfile> profiles;
  profiles.reserve(num_prompts);
  for (int p = 0; p < num_prompts; ++p) {
    SceneProfile sp;
    sp.prompt_id = p;
    sp.plan = oracle.plan_for(p);

    // Target "good image" latent: fixed direction, norm 2.5.
    Rng rng(mix_seed(seed, fnv1a64("scene-target"), p));
    sp.target_latent.resize(latent_dim);
    double norm = 0.0;
    for (double& v : sp.target_latent) {
      v = normal01(rng);
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (double& v : sp.target_latent) v *= 2.5 / norm;

    // Actionable tokens are exactly the plan's content; forbidden tokens are
    // the global "new object" list.
    std::set<TokenId> distinct;
    for (TokenId t : sp.plan.flat_content()) distinct.insert(t);
    sp.lexicon.actionable.assign(distinct.begin(), distinct.end());
    for (const auto& word : forbidden_token_spellings()) {
      sp.lexicon.forbidden.push_back(vocab.id_of(word));
    }

    sp.text_cue = "try " + vocab.spelling(sp.plan.segment(2).front()) +
                  " with " + vocab.spelling(sp.plan.segment(7).front());
    profiles.push_back(std::move(sp));
  }
  return profiles;
}

bool GeneratorConfig::valid() const {
  const int unique = total_videos - duplicate_videos;
  const int planted_pair_drops = drop_quality + drop_aesthetic + drop_artifact +
                                 drop_overlay + drop_scene_change +
                                 drop_identity + drop_new_object +
                                 drop_cross_event + drop_poor_equals_good;
  return total_videos > 0 && duplicate_videos >= 0 && unique >= kept_videos &&
         kept_videos > 0 && final_pairs >= 0 && num_prompts > 0 &&
         latent_dim > 0 && planted_pair_drops <= kept_videos;
}

namespace {

FrameRecord make_good_frame(double ts, const SceneProfile& profile,
                            int person, int scene, int event, Rng& rng) {
  FrameRecord f;
  f.timestamp = ts;
  f.is_good = true;
  f.quality_score = 0.55 + 0.4 * uniform01(rng);
  f.aesthetic_score = 0.55 + 0.4 * uniform01(rng);
  f.person_id = person;
  f.scene_id = scene;
  f.event_id = event;
  f.features.resize(profile.target_latent.size());
  for (size_t i = 0; i < f.features.size(); ++i) {
    f.features[i] = profile.target_latent[i] + 0.05 * normal01(rng);
  }
  return f;
}

}  // namespace

GeneratedCorpus generate_videos(const GeneratorConfig& cfg,
                                const Vocabulary& vocab) {
  if (!cfg.valid()) throw ConfigError("generator configuration is infeasible");

  GeneratedCorpus out;
  out.profiles =
      make_scene_profiles(cfg.seed, cfg.num_prompts, vocab, cfg.latent_dim);

  const int unique = cfg.total_videos - cfg.duplicate_videos;
  const int screened_out = unique - cfg.kept_videos;

  // Role of each unique video, shuffled so ids do not encode the funnel.
  enum class Role { kKept, kScreened };
  std::vector<Role> roles;
  roles.reserve(unique);
  for (int i = 0; i < cfg.kept_videos; ++i) roles.push_back(Role::kKept);
  for (int i = 0; i < screened_out; ++i) roles.push_back(Role::kScreened);
  Rng role_rng(mix_seed(cfg.seed, fnv1a64("generator-roles")));
  shuffle_in_place(roles, role_rng);

  // Planted drop tasks, spread over kept videos by a coprime stride.
  struct Task {
    enum Kind {
      kQuality,
      kAesthetic,
      kArtifact,
      kOverlay,
      kSceneChange,
      kIdentity,
      kNewObject,
      kCrossEvent,
      kPoorEqualsGood,
    } kind;
  };
  std::vector<Task::Kind> task_list;
  auto plant = [&task_list](int count, Task::Kind kind) {
    for (int i = 0; i < count; ++i) task_list.push_back(kind);
  };
  plant(cfg.drop_quality, Task::kQuality);
  plant(cfg.drop_aesthetic, Task::kAesthetic);
  plant(cfg.drop_artifact, Task::kArtifact);
  plant(cfg.drop_overlay, Task::kOverlay);
  plant(cfg.drop_scene_change, Task::kSceneChange);
  plant(cfg.drop_identity, Task::kIdentity);
  plant(cfg.drop_new_object, Task::kNewObject);
  plant(cfg.drop_cross_event, Task::kCrossEvent);
  plant(cfg.drop_poor_equals_good, Task::kPoorEqualsGood);

  std::vector<std::optional<Task::Kind>> task_of(cfg.kept_videos);
  for (size_t j = 0; j < task_list.size(); ++j) {
    // stride 997 is coprime with any kept count we use; injective while
    // task_list.size() <= kept_videos (checked by GeneratorConfig::valid)
    size_t slot = (j * 997) % static_cast<size_t>(cfg.kept_videos);
    while (task_of[slot].has_value()) slot = (slot + 1) % cfg.kept_videos;
    task_of[slot] = task_list[j];
  }

  const int base_pairs = cfg.final_pairs / cfg.kept_videos;
  const int extra_pairs = cfg.final_pairs % cfg.kept_videos;

  out.videos.reserve(cfg.total_videos);
  int kept_index = 0;
  for (int u = 0; u < unique; ++u) {
    VideoRecord v;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "vid-%06d", u);
    v.video_id = buf;

    if (roles[u] == Role::kScreened) {
      const int which = u % 3;
      v.flag_ad = which == 0;
      v.flag_irrelevant = which == 1;
      v.flag_showcase_only = which == 2;
      v.prompt_id = u % cfg.num_prompts;
      FrameRecord f;
      f.timestamp = 0.0;
      f.features.assign(cfg.latent_dim, 0.0);
      v.frames.push_back(f);
      v.segments.push_back({0.0, 0.0});
      out.videos.push_back(std::move(v));
      continue;
    }

    const int k = kept_index++;
    v.prompt_id = k % cfg.num_prompts;
    const SceneProfile& profile = out.profiles[v.prompt_id];
    Rng rng(mix_seed(cfg.seed, fnv1a64("kept-video"), k));
    const std::optional<Task::Kind> task = task_of[k];

    const int person = 1000 + k;
    const int scene = 2000 + k;
    const int event = 3000 + 10 * k;

    // Poor baseline shot: the target latent pushed a fixed distance away.
    FrameRecord poor;
    poor.timestamp = 0.0;
    poor.person_id = person;
    poor.scene_id = scene;
    poor.event_id = event;
    poor.quality_score = 0.3;
    poor.aesthetic_score = 0.2;
    poor.is_good = task == Task::kPoorEqualsGood;
    if (k % 3 != 0) {
      poor.has_overlay = true;
      poor.overlay_difficulty = 1 + (k / 3) % 3;  // always within the budget
    }
    {
      LatentVec dir(cfg.latent_dim);
      double norm = 0.0;
      for (double& d : dir) {
        d = normal01(rng);
        norm += d * d;
      }
      norm = std::sqrt(norm);
      poor.features.resize(cfg.latent_dim);
      for (int i = 0; i < cfg.latent_dim; ++i) {
        poor.features[i] = profile.target_latent[i] + 2.0 * dir[i] / norm;
      }
    }
    v.frames.push_back(poor);

    auto next_ts = [&v] { return 0.5 * static_cast<double>(v.frames.size()); };

    const int pairs_here = base_pairs + (k < extra_pairs ? 1 : 0);
    for (int g = 0; g < pairs_here; ++g) {
      // teaching frame between results, overlaid like the raw footage
      FrameRecord filler = poor;
      filler.timestamp = next_ts();
      filler.is_good = false;
      for (double& x : filler.features) x += 0.02 * normal01(rng);
      v.frames.push_back(filler);
      v.frames.push_back(
          make_good_frame(next_ts(), profile, person, scene, event, rng));
    }

    if (task && *task != Task::kPoorEqualsGood && *task != Task::kOverlay) {
      FrameRecord bad =
          make_good_frame(next_ts(), profile, person, scene, event, rng);
      switch (*task) {
        case Task::kQuality:
          bad.quality_score = 0.05 + 0.4 * uniform01(rng);
          break;
        case Task::kAesthetic:
          bad.aesthetic_score = 0.05 + 0.4 * uniform01(rng);
          break;
        case Task::kArtifact:
          bad.has_transition_artifact = true;
          break;
        case Task::kSceneChange:
          bad.scene_id = scene + 500000;
          break;
        case Task::kIdentity:
          bad.person_id = person + 500000;
          break;
        case Task::kNewObject:
          bad.new_object = true;
          break;
        case Task::kCrossEvent:
          bad.event_id = event + 5;
          break;
        default:
          break;
      }
      v.frames.push_back(std::move(bad));
    }
    v.segments.push_back({0.0, v.frames.back().timestamp});

    if (task == Task::kOverlay) {
      // A second shooting event whose baseline shot cannot be cleaned.
      FrameRecord stubborn = poor;
      stubborn.timestamp = next_ts();
      stubborn.is_good = false;
      stubborn.has_overlay = true;
      stubborn.overlay_difficulty = 1000;
      stubborn.event_id = event + 1;
      const double seg_start = stubborn.timestamp;
      v.frames.push_back(std::move(stubborn));
      FrameRecord g =
          make_good_frame(next_ts(), profile, person, scene, event + 1, rng);
      v.segments.push_back({seg_start, g.timestamp});
      v.frames.push_back(std::move(g));
    }

    out.videos.push_back(std::move(v));
  }

  // Duplicate records: identical copies of existing videos, same id.
  for (int d = 0; d < cfg.duplicate_videos; ++d) {
    const size_t victim =
        (static_cast<size_t>(d) * 131 + 17) % static_cast<size_t>(unique);
    out.videos.push_back(out.videos[victim]);
  }

  Rng order_rng(mix_seed(cfg.seed, fnv1a64("generator-order")));
  shuffle_in_place(out.videos, order_rng);
  return out;
}

// ---------------------------------------------------------------------------
// End-to-end mining

MineResult mine_corpus(std::span<const VideoRecord> videos,
                       std::span<const SceneProfile> profiles,
                       CorpusOracles& oracles, const MineConfig& cfg) {
  MineResult r;
  r.videos_in = videos.size();

  VideoStageResult screened = dedup_and_screen(videos, *oracles.screen);
  r.videos_kept = screened.kept.size();
  std::sort(screened.kept.begin(), screened.kept.end(),
            [](const VideoRecord& a, const VideoRecord& b) {
              return a.video_id < b.video_id;
            });

  std::vector<PairRecord> coarse;
  std::vector<DropRecord> coarse_drops;
  for (const VideoRecord& v : screened.kept) {
    if (v.prompt_id < 0 || static_cast<size_t>(v.prompt_id) >= profiles.size()) {
      throw ConfigError("video " + v.video_id + " has prompt id " +
                        std::to_string(v.prompt_id) + " with no profile");
    }
    const SceneProfile& profile = profiles[v.prompt_id];
    const auto segments = oracles.segments->localize(v);
    PairStageResult res = construct_coarse_pairs(
        v, segments, *oracles.good_frame, profile.plan, profile.text_cue);
    std::move(res.kept.begin(), res.kept.end(), std::back_inserter(coarse));
    std::move(res.drops.begin(), res.drops.end(),
              std::back_inserter(coarse_drops));
  }
  r.coarse_pairs = coarse.size();

  PairStageResult filtered =
      filter_good_images(std::move(coarse), *oracles.quality,
                         *oracles.aesthetic, *oracles.artifact, cfg.thresholds);
  r.after_filter = filtered.kept.size();

  PairStageResult cleaned =
      remove_overlays(std::move(filtered.kept), *oracles.overlay_editor,
                      *oracles.overlay_verifier, cfg.max_overlay_retries);
  r.after_overlay = cleaned.kept.size();

  PairStageResult aligned =
      strict_align(std::move(cleaned.kept), *oracles.alignment);
  r.after_align = aligned.kept.size();
  r.final_pairs = aligned.kept;

  SplitResult split =
      split_dataset(std::move(aligned.kept), cfg.test_count, cfg.seed);
  r.train = std::move(split.train);
  r.test = std::move(split.test);

  r.drops.emplace_back("screen", std::move(screened.drops));
  r.drops.emplace_back("coarse", std::move(coarse_drops));
  r.drops.emplace_back("good-filter", std::move(filtered.drops));
  r.drops.emplace_back("overlay", std::move(cleaned.drops));
  r.drops.emplace_back("align", std::move(aligned.drops));
  return r;
}

// ---------------------------------------------------------------------------
// Dataset adapters

std::vector<SftExample> sft_examples_from_pairs(
    std::span<const PairRecord> pairs) {
  std::vector<SftExample> out;
  out.reserve(pairs.size());
  for (const PairRecord& p : pairs) {
    out.push_back({p.prompt_id, serialize_action_plan(p.actions)});
  }
  return out;
}

std::vector<FlowExample> flow_examples_from_pairs(
    std::span<const PairRecord> pairs, const PlanEncoder& encoder,
    const Vocabulary& vocab) {
  std::vector<FlowExample> out;
  out.reserve(pairs.size());
  for (const PairRecord& p : pairs) {
    FlowExample ex;
    ex.prompt_id = p.prompt_id;
    ex.plan_tokens = serialize_action_plan(p.actions);
    ex.x0 = p.good.features;
    ex.h = encoder.encode(p.prompt_id, ex.plan_tokens, vocab);
    out.push_back(std::move(ex));
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSONL I/O

namespace {

nlohmann::json frame_to_json(const FrameRecord& f) {
  return {
      {"ts", f.timestamp},
      {"features", f.features},
      {"good", f.is_good},
      {"overlay", f.has_overlay},
      {"artifact", f.has_transition_artifact},
      {"quality", f.quality_score},
      {"aesthetic", f.aesthetic_score},
      {"person", f.person_id},
      {"scene", f.scene_id},
      {"event", f.event_id},
      {"new_object", f.new_object},
      {"overlay_difficulty", f.overlay_difficulty},
  };
}

FrameRecord frame_from_json(const nlohmann::json& j) {
  FrameRecord f;
  f.timestamp = j.at("ts").get<double>();
  f.features = j.at("features").get<std::vector<double>>();
  f.is_good = j.at("good").get<bool>();
  f.has_overlay = j.at("overlay").get<bool>();
  f.has_transition_artifact = j.at("artifact").get<bool>();
  f.quality_score = j.at("quality").get<double>();
  f.aesthetic_score = j.at("aesthetic").get<double>();
  f.person_id = j.at("person").get<int>();
  f.scene_id = j.at("scene").get<int>();
  f.event_id = j.at("event").get<int>();
  f.new_object = j.at("new_object").get<bool>();
  f.overlay_difficulty = j.at("overlay_difficulty").get<int>();
  return f;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path);
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read " + path);
  return is;
}

}  // namespace

void write_videos_jsonl(const std::string& path,
                        std::span<const VideoRecord> videos) {
  auto os = open_out(path);
  for (const VideoRecord& v : videos) {
    nlohmann::json segs = nlohmann::json::array();
    for (const Segment& s : v.segments) {
      segs.push_back({{"start", s.start}, {"end", s.end}});
    }
    nlohmann::json frames = nlohmann::json::array();
    for (const FrameRecord& f : v.frames) frames.push_back(frame_to_json(f));
    const nlohmann::json j{
        {"video_id", v.video_id},
        {"prompt_id", v.prompt_id},
        {"flags",
         {{"ad", v.flag_ad},
          {"irrelevant", v.flag_irrelevant},
          {"showcase_only", v.flag_showcase_only}}},
        {"segments", segs},
        {"frames", frames},
    };
    os << j.dump() << '\n';
  }
}

std::vector<VideoRecord> read_videos_jsonl(const std::string& path) {
  auto is = open_in(path);
  std::vector<VideoRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    VideoRecord v;
    v.video_id = j.at("video_id").get<std::string>();
    v.prompt_id = j.at("prompt_id").get<int>();
    const auto& flags = j.at("flags");
    v.flag_ad = flags.at("ad").get<bool>();
    v.flag_irrelevant = flags.at("irrelevant").get<bool>();
    v.flag_showcase_only = flags.at("showcase_only").get<bool>();
    for (const auto& s : j.at("segments")) {
      v.segments.push_back(
          {s.at("start").get<double>(), s.at("end").get<double>()});
    }
    for (const auto& f : j.at("frames")) v.frames.push_back(frame_from_json(f));
    out.push_back(std::move(v));
  }
  return out;
}

void write_pairs_jsonl(const std::string& path,
                       std::span<const PairRecord> pairs,
                       const Vocabulary& vocab) {
  auto os = open_out(path);
  for (const PairRecord& p : pairs) {
    const nlohmann::json j{
        {"video_id", p.video_id},
        {"segment", p.segment_index},
        {"prompt_id", p.prompt_id},
        {"poor", frame_to_json(p.poor)},
        {"good", frame_to_json(p.good)},
        {"actions", nlohmann::json::parse(plan_to_json(p.actions, vocab))},
        {"text_cue", p.text_cue},
        {"audit", p.audit},
    };
    os << j.dump() << '\n';
  }
}

std::vector<PairRecord> read_pairs_jsonl(const std::string& path,
                                         const Vocabulary& vocab) {
  auto is = open_in(path);
  std::vector<PairRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    PairRecord p;
    p.video_id = j.at("video_id").get<std::string>();
    p.segment_index = j.at("segment").get<int>();
    p.prompt_id = j.at("prompt_id").get<int>();
    p.poor = frame_from_json(j.at("poor"));
    p.good = frame_from_json(j.at("good"));
    p.actions = plan_from_json(j.at("actions").dump(), vocab);
    p.text_cue = j.at("text_cue").get<std::string>();
    p.audit = j.at("audit").get<std::vector<std::string>>();
    out.push_back(std::move(p));
  }
  return out;
}

void write_drops_jsonl(const std::string& path,
                       std::span<const DropRecord> drops) {
  auto os = open_out(path);
  for (const DropRecord& d : drops) {
    const nlohmann::json j{
        {"video_id", d.video_id}, {"segment", d.segment_index},
        {"stage", d.stage},       {"reason", d.reason},
        {"poor_ts", d.poor_ts},   {"good_ts", d.good_ts},
    };
    os << j.dump() << '\n';
  }
}

std::string profiles_to_json(std::span<const SceneProfile> profiles,
                             const Vocabulary& vocab) {
  nlohmann::json arr = nlohmann::json::array();
  for (const SceneProfile& sp : profiles) {
    nlohmann::json actionable = nlohmann::json::array();
    for (TokenId t : sp.lexicon.actionable) actionable.push_back(vocab.spelling(t));
    nlohmann::json forbidden = nlohmann::json::array();
    for (TokenId t : sp.lexicon.forbidden) forbidden.push_back(vocab.spelling(t));
    arr.push_back({
        {"prompt_id", sp.prompt_id},
        {"plan", nlohmann::json::parse(plan_to_json(sp.plan, vocab))},
        {"target_latent", sp.target_latent},
        {"actionable", actionable},
        {"forbidden", forbidden},
        {"text_cue", sp.text_cue},
    });
  }
  return nlohmann::json{{"vocab_hash", vocab.fingerprint()},
                        {"profiles", arr}}
      .dump();
}

std::vector<SceneProfile> profiles_from_json(const std::string& text,
                                             const Vocabulary& vocab) {
  const auto j = nlohmann::json::parse(text);
  if (j.at("vocab_hash").get<uint64_t>() != vocab.fingerprint()) {
    throw CheckpointMismatchError(
        "profiles were generated against a different vocabulary");
  }
  std::vector<SceneProfile> out;
  for (const auto& e : j.at("profiles")) {
    SceneProfile sp;
    sp.prompt_id = e.at("prompt_id").get<int>();
    sp.plan = plan_from_json(e.at("plan").dump(), vocab);
    sp.target_latent = e.at("target_latent").get<std::vector<double>>();
    for (const auto& w : e.at("actionable")) {
      sp.lexicon.actionable.push_back(vocab.id_of(w.get<std::string>()));
    }
    for (const auto& w : e.at("forbidden")) {
      sp.lexicon.forbidden.push_back(vocab.id_of(w.get<std::string>()));
    }
    sp.text_cue = e.at("text_cue").get<std::string>();
    out.push_back(std::move(sp));
  }
  return out;
}

void save_profiles(const std::string& path,
                   std::span<const SceneProfile> profiles,
                   const Vocabulary& vocab) {
  auto os = open_out(path);
  os << profiles_to_json(profiles, vocab);
}

std::vector<SceneProfile> load_profiles(const std::string& path,
                                        const Vocabulary& vocab) {
  auto is = open_in(path);
  std::string text((std::istreambuf_iterator<char>(is)),
                   std::istreambuf_iterator<char>());
  return profiles_from_json(text, vocab);
}

}  // namespace planedit
