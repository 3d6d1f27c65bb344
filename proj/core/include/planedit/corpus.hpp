#pragma once

// Corpus mining: converts synthetic tutorial-video records into strictly
// aligned (poor, good) training pairs through staged filters, every judgment
// delegated to a pluggable classifier oracle. The mock oracles read planted
// ground-truth flags, so the whole funnel is deterministic and auditable:
// at every stage |input| = |kept| + |drops|, and each drop carries exactly
// one stage and reason.

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "planedit/errors.hpp"
#include "planedit/flow.hpp"
#include "planedit/grammar.hpp"
#include "planedit/reward.hpp"
#include "planedit/sft.hpp"

namespace planedit {

// ---------------------------------------------------------------------------
// Data model

struct FrameRecord {
  double timestamp = 0.0;
  LatentVec features;  // stands in for the image content

  // Planted ground truth, consumed only by mock oracles.
  bool is_good = false;
  bool has_overlay = false;
  bool has_transition_artifact = false;
  double quality_score = 0.0;
  double aesthetic_score = 0.0;
  int person_id = 0;
  int scene_id = 0;
  int event_id = 0;
  bool new_object = false;
  int overlay_difficulty = 0;  // attempts a mock edit needs to succeed
};

struct Segment {
  double start = 0.0;
  double end = 0.0;
};

struct VideoRecord {
  std::string video_id;
  int prompt_id = 0;
  std::vector<FrameRecord> frames;  // strictly increasing timestamps
  std::vector<Segment> segments;    // non-overlapping, within duration
  bool flag_ad = false;
  bool flag_irrelevant = false;
  bool flag_showcase_only = false;
};

struct PairRecord {
  std::string video_id;
  int segment_index = 0;
  int prompt_id = 0;
  FrameRecord poor;  // replaced in place by overlay removal
  FrameRecord good;
  ActionPlan actions;
  std::string text_cue;
  std::vector<std::string> audit;  // one entry per stage verdict
};

struct DropRecord {
  std::string video_id;
  int segment_index = 0;
  std::string stage;
  std::string reason;
  double poor_ts = 0.0;
  double good_ts = 0.0;
};

struct PairStageResult {
  std::vector<PairRecord> kept;
  std::vector<DropRecord> drops;
};

struct VideoStageResult {
  std::vector<VideoRecord> kept;
  std::vector<DropRecord> drops;
};

// ---------------------------------------------------------------------------
// Classifier oracle interfaces (mocks read the planted flags; real
// implementations would call out to VLM services)

class ScreenOracle {
 public:
  virtual ~ScreenOracle() = default;
  // Empty result means keep; otherwise the screening reason.
  virtual std::optional<std::string> exclusion_reason(const VideoRecord&) = 0;
};

class SegmentOracle {
 public:
  virtual ~SegmentOracle() = default;
  virtual std::vector<Segment> localize(const VideoRecord&) = 0;
};

class GoodFrameOracle {
 public:
  virtual ~GoodFrameOracle() = default;
  virtual bool is_good(const FrameRecord&) = 0;
};

class FrameScoreOracle {
 public:
  virtual ~FrameScoreOracle() = default;
  virtual double score(const FrameRecord&) = 0;
};

class ArtifactOracle {
 public:
  virtual ~ArtifactOracle() = default;
  virtual bool has_artifact(const FrameRecord&) = 0;
};

class OverlayEditorOracle {
 public:
  virtual ~OverlayEditorOracle() = default;
  virtual FrameRecord edit(const FrameRecord& frame, int attempt) = 0;
};

class OverlayVerifierOracle {
 public:
  virtual ~OverlayVerifierOracle() = default;
  virtual bool verify(const FrameRecord& original, const FrameRecord& edited) = 0;
};

class PairAlignmentOracle {
 public:
  virtual ~PairAlignmentOracle() = default;
  // Empty result means aligned; otherwise the rejection reason.
  virtual std::optional<std::string> reject_reason(const FrameRecord& poor,
                                                   const FrameRecord& good) = 0;
};

struct CorpusOracles {
  std::unique_ptr<ScreenOracle> screen;
  std::unique_ptr<SegmentOracle> segments;
  std::unique_ptr<GoodFrameOracle> good_frame;
  std::unique_ptr<FrameScoreOracle> quality;
  std::unique_ptr<FrameScoreOracle> aesthetic;
  std::unique_ptr<ArtifactOracle> artifact;
  std::unique_ptr<OverlayEditorOracle> overlay_editor;
  std::unique_ptr<OverlayVerifierOracle> overlay_verifier;
  std::unique_ptr<PairAlignmentOracle> alignment;

  static CorpusOracles mocks();
};

// ---------------------------------------------------------------------------
// Pipeline stages

// One record per video id (first occurrence wins), screening failures removed.
VideoStageResult dedup_and_screen(std::span<const VideoRecord> videos,
                                  ScreenOracle& screen);

// Frames nearest to the 2 fps grid start, start+0.5, ... <= end, deduplicated.
// Throws EmptySegmentError when no frame falls inside the segment.
std::vector<FrameRecord> sample_frames(const Segment& segment,
                                       const VideoRecord& video);

// Each oracle-flagged good frame pairs with its segment's first sampled
// frame. Pairs that would not satisfy poor.ts < good.ts are dropped here.
PairStageResult construct_coarse_pairs(const VideoRecord& video,
                                       std::span<const Segment> segments,
                                       GoodFrameOracle& good_oracle,
                                       const ActionPlan& actions,
                                       const std::string& text_cue);

struct FilterThresholds {
  double quality = 0.5;    // inclusive
  double aesthetic = 0.5;  // inclusive
};

PairStageResult filter_good_images(std::vector<PairRecord> pairs,
                                   FrameScoreOracle& quality,
                                   FrameScoreOracle& aesthetic,
                                   ArtifactOracle& artifact,
                                   const FilterThresholds& thresholds);

// Edit-verify-retry loop on overlaid poor frames; exhausting the retry
// budget drops the pair (a data outcome, not a fault).
PairStageResult remove_overlays(std::vector<PairRecord> pairs,
                                OverlayEditorOracle& editor,
                                OverlayVerifierOracle& verifier,
                                int max_retries);

PairStageResult strict_align(std::vector<PairRecord> pairs,
                             PairAlignmentOracle& alignment);

struct SplitResult {
  std::vector<PairRecord> train;
  std::vector<PairRecord> test;
};

// Seeded uniform sample without replacement; disjoint and exhaustive.
SplitResult split_dataset(std::vector<PairRecord> pairs, int test_count,
                          uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic world

// Canonical per-dimension content lexicons plus the forbidden "new object"
// tokens; the default vocabulary is their union behind the delimiters.
const std::array<std::vector<std::string>, kNumDimensions>& dimension_lexicons();
const std::vector<std::string>& forbidden_token_spellings();
Vocabulary default_vocabulary();

// Deterministic ground-truth plan generator with the generate-verify-retry
// loop: resample with a fresh seed until the plan passes the format check,
// at most max_attempts times. corrupt_attempts exists for tests that need to
// see the retry path fire.
class PlanOracle {
 public:
  PlanOracle(const Vocabulary& vocab, uint64_t seed, int max_attempts = 3,
             int corrupt_attempts = 0);
  ActionPlan plan_for(int prompt_id);

 private:
  const Vocabulary* vocab_;
  uint64_t seed_;
  int max_attempts_;
  int corrupt_attempts_;
};

struct SceneProfile {
  int prompt_id = 0;
  ActionPlan plan;           // ground-truth actions for this scene
  LatentVec target_latent;   // the "good image" latent the editor learns
  SceneLexicon lexicon;      // actionable / forbidden tokens for rewards
  std::string text_cue;
};

std::vector<SceneProfile> make_scene_profiles(uint64_t seed, int num_prompts,
                                              const Vocabulary& vocab,
                                              int latent_dim);

// Generator configuration. The defaults plant the reference funnel: 5,700
// raw videos deduplicate and screen down to 2,144, and exactly 9,071 pairs
// survive every filter; the per-reason budgets below are the planted drops.
struct GeneratorConfig {
  uint64_t seed = 7;
  int total_videos = 5700;
  int duplicate_videos = 212;
  int kept_videos = 2144;
  int final_pairs = 9071;
  int num_prompts = 5;
  int latent_dim = 8;

  int drop_quality = 400;
  int drop_aesthetic = 300;
  int drop_artifact = 200;
  int drop_overlay = 150;
  int drop_scene_change = 120;
  int drop_identity = 110;
  int drop_new_object = 100;
  int drop_cross_event = 80;
  int drop_poor_equals_good = 50;

  bool valid() const;
};

struct GeneratedCorpus {
  std::vector<VideoRecord> videos;
  std::vector<SceneProfile> profiles;
};

GeneratedCorpus generate_videos(const GeneratorConfig& cfg,
                                const Vocabulary& vocab);

// ---------------------------------------------------------------------------
// End-to-end mining

struct MineConfig {
  FilterThresholds thresholds;
  int max_overlay_retries = 3;
  int test_count = 903;
  uint64_t seed = 7;
};

struct MineResult {
  std::vector<PairRecord> final_pairs;
  std::vector<PairRecord> train;
  std::vector<PairRecord> test;

  size_t videos_in = 0;
  size_t videos_kept = 0;
  size_t coarse_pairs = 0;
  size_t after_filter = 0;
  size_t after_overlay = 0;
  size_t after_align = 0;

  // stage name -> drops, in pipeline order
  std::vector<std::pair<std::string, std::vector<DropRecord>>> drops;
};

MineResult mine_corpus(std::span<const VideoRecord> videos,
                       std::span<const SceneProfile> profiles,
                       CorpusOracles& oracles, const MineConfig& cfg);

// ---------------------------------------------------------------------------
// Dataset adapters and JSONL I/O

std::vector<SftExample> sft_examples_from_pairs(
    std::span<const PairRecord> pairs);
std::vector<FlowExample> flow_examples_from_pairs(
    std::span<const PairRecord> pairs, const PlanEncoder& encoder,
    const Vocabulary& vocab);

void write_videos_jsonl(const std::string& path,
                        std::span<const VideoRecord> videos);
std::vector<VideoRecord> read_videos_jsonl(const std::string& path);

void write_pairs_jsonl(const std::string& path,
                       std::span<const PairRecord> pairs,
                       const Vocabulary& vocab);
std::vector<PairRecord> read_pairs_jsonl(const std::string& path,
                                         const Vocabulary& vocab);

void write_drops_jsonl(const std::string& path,
                       std::span<const DropRecord> drops);

std::string profiles_to_json(std::span<const SceneProfile> profiles,
                             const Vocabulary& vocab);
std::vector<SceneProfile> profiles_from_json(const std::string& text,
                                             const Vocabulary& vocab);
void save_profiles(const std::string& path,
                   std::span<const SceneProfile> profiles,
                   const Vocabulary& vocab);
std::vector<SceneProfile> load_profiles(const std::string& path,
                                        const Vocabulary& vocab);

}  // namespace planedit
