#pragma once

// Seven-dimension action-plan grammar.
//
// An action plan is a token sequence of exactly seven delimited segments, one
// per photographic decision dimension, in a fixed global-to-local order:
//   (1) aspect ratio, (2) framing and composition, (3) camera viewpoint,
//   (4) subject placement, (5) subject pose and action details,
//   (6) focus and depth-of-field, (7) color and light.
// Each segment is enclosed by its dimension's reserved open/close tokens
// (`<dK>` / `</dK>`); nothing may appear outside the delimiters. The binary
// format reward is the indicator of that exact shape.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "planedit/errors.hpp"

namespace planedit {

using TokenId = int32_t;

inline constexpr int kNumDimensions = 7;
inline constexpr int kNumDelimiterTokens = 2 * kNumDimensions;

// 1-based dimension index -> label.
const char* dimension_name(int dimension);

// Token alphabet. Ids 0..13 are reserved for the seven open/close delimiter
// pairs; content tokens follow. Every id maps to exactly one spelling.
class Vocabulary {
 public:
  explicit Vocabulary(const std::vector<std::string>& content_tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  int content_size() const { return size() - kNumDelimiterTokens; }

  static bool is_delimiter(TokenId id) {
    return id >= 0 && id < kNumDelimiterTokens;
  }
  static bool is_open(TokenId id) { return is_delimiter(id) && id % 2 == 0; }
  static bool is_close(TokenId id) { return is_delimiter(id) && id % 2 == 1; }
  // 1-based dimension of a delimiter token.
  static int delimiter_dimension(TokenId id) { return static_cast<int>(id) / 2 + 1; }
  static TokenId open_id(int dimension) { return 2 * (dimension - 1); }
  static TokenId close_id(int dimension) { return 2 * (dimension - 1) + 1; }
  // Generation stops at the close of the last dimension.
  static TokenId end_token() { return close_id(kNumDimensions); }

  bool contains(TokenId id) const { return id >= 0 && id < size(); }
  const std::string& spelling(TokenId id) const;
  TokenId id_of(const std::string& token) const;  // throws UnknownTokenError

  // Order-sensitive digest of all spellings; stored in checkpoints so that a
  // table trained against one alphabet cannot be loaded against another.
  uint64_t fingerprint() const { return fingerprint_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
  uint64_t fingerprint_ = 0;
};

// Parsed plan: content tokens per dimension, delimiters stripped. Invariant:
// content never contains delimiter ids (enforced by parse, assumed by
// serialize). Empty content is legal, meaning "no change" on that dimension.
struct ActionPlan {
  std::array<std::vector<TokenId>, kNumDimensions> content;

  bool operator==(const ActionPlan&) const = default;

  const std::vector<TokenId>& segment(int dimension) const {
    return content[dimension - 1];
  }
  std::vector<TokenId>& segment(int dimension) { return content[dimension - 1]; }

  // All content tokens in dimension order, delimiters excluded.
  std::vector<TokenId> flat_content() const;
};

enum class ParseErrorKind {
  kMissingDimension,
  kOutOfOrder,
  kUnbalancedDelimiter,
  kStrayToken,
  kDuplicateDimension,
};

struct ParseError {
  ParseErrorKind kind = ParseErrorKind::kMissingDimension;
  int dimension = 0;           // offending dimension, when applicable
  int expected_dimension = 0;  // for kOutOfOrder
  int position = -1;           // token index, when applicable
  std::string message() const;
};

struct ParseResult {
  bool ok = false;
  ActionPlan plan;
  ParseError error;
};

// Total over arbitrary token sequences; never throws. Reports the first
// violation found scanning left to right.
ParseResult parse_action_plan(std::span<const TokenId> tokens,
                              const Vocabulary& vocab);

// Inverse of parse: open/content/close per dimension, in order.
std::vector<TokenId> serialize_action_plan(const ActionPlan& plan);

// 1 iff tokens form a complete, strictly ordered seven-segment plan.
int format_reward(std::span<const TokenId> tokens, const Vocabulary& vocab);

// Re-serializes the plan's segments in a seeded non-identity permutation,
// keeping each segment's own delimiters and content. Ablation use only; the
// output always fails the format check.
std::vector<TokenId> shuffle_dimensions(const ActionPlan& plan, uint64_t seed);

// Line-oriented text form: spellings separated by single spaces.
std::string tokens_to_line(std::span<const TokenId> tokens,
                           const Vocabulary& vocab);
std::vector<TokenId> line_to_tokens(const std::string& line,
                                    const Vocabulary& vocab);

// Structured record form used inside corpus JSONL:
//   {"segments":[{"dimension":1,"content":["ar-3x2"]}, ...]}
std::string plan_to_json(const ActionPlan& plan, const Vocabulary& vocab);
ActionPlan plan_from_json(const std::string& json_text, const Vocabulary& vocab);

}  // namespace planedit
