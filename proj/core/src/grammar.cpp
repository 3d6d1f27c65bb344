#include "planedit/grammar.hpp"

#include <json.hpp>
#include <sstream>

#include "planedit/util.hpp"

namespace planedit {

namespace {

constexpr const char* kDimensionNames[kNumDimensions] = {
    "aspect ratio",
    "framing and composition",
    "camera viewpoint",
    "subject placement",
    "subject pose and action details",
    "focus and depth-of-field",
    "color and light",
};

std::string token_or_id(const Vocabulary& vocab, TokenId id) {
  if (vocab.contains(id)) return vocab.spelling(id);
  return "#" + std::to_string(id);
}

}  // namespace

const char* dimension_name(int dimension) {
  return kDimensionNames[dimension - 1];
}

Vocabulary::Vocabulary(const std::vector<std::string>& content_tokens) {
  tokens_.reserve(kNumDelimiterTokens + content_tokens.size());
  for (int dim = 1; dim <= kNumDimensions; ++dim) {
    tokens_.push_back("<d" + std::to_string(dim) + ">");
    tokens_.push_back("</d" + std::to_string(dim) + ">");
  }
  for (const auto& t : content_tokens) tokens_.push_back(t);

  for (TokenId id = 0; id < static_cast<TokenId>(tokens_.size()); ++id) {
    auto [it, inserted] = ids_.emplace(tokens_[id], id);
    if (!inserted) {
      throw ConfigError("duplicate token spelling in vocabulary: " +
                        tokens_[id]);
    }
  }

  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : tokens_) {
    h = fnv1a64(t) ^ (h * 0x100000001b3ULL);
  }
  fingerprint_ = h;
}

const std::string& Vocabulary::spelling(TokenId id) const {
  if (!contains(id)) {
    throw UnknownTokenError("token id out of range: " + std::to_string(id));
  }
  return tokens_[id];
}

TokenId Vocabulary::id_of(const std::string& token) const {
  auto it = ids_.find(token);
  if (it == ids_.end()) {
    throw UnknownTokenError("unknown token: " + token);
  }
  return it->second;
}

std::vector<TokenId> ActionPlan::flat_content() const {
  std::vector<TokenId> out;
  for (const auto& seg : content) out.insert(out.end(), seg.begin(), seg.end());
  return out;
}

std::string ParseError::message() const {
  std::ostringstream os;
  switch (kind) {
    case ParseErrorKind::kMissingDimension:
      os << "missing dimension " << dimension << " (" << dimension_name(dimension) << ")";
      break;
    case ParseErrorKind::kOutOfOrder:
      os << "dimension " << dimension << " seen where " << expected_dimension
         << " was expected, at position " << position;
      break;
    case ParseErrorKind::kUnbalancedDelimiter:
      os << "unbalanced delimiter at position " << position;
      break;
    case ParseErrorKind::kStrayToken:
      os << "stray token outside any segment at position " << position;
      break;
    case ParseErrorKind::kDuplicateDimension:
      os << "duplicate dimension " << dimension << " at position " << position;
      break;
  }
  return os.str();
}

ParseResult parse_action_plan(std::span<const TokenId> tokens,
                              const Vocabulary& vocab) {
  (void)vocab;  // structure is fully determined by the reserved ids
  ParseResult res;
  int expected = 1;  // next dimension an open delimiter must introduce
  size_t i = 0;
  const size_t n = tokens.size();

  auto fail = [&res](ParseError err) {
    res.ok = false;
    res.error = err;
    return res;
  };

  while (i < n) {
    const TokenId tok = tokens[i];
    if (Vocabulary::is_open(tok)) {
      const int dim = Vocabulary::delimiter_dimension(tok);
      if (dim < expected) {
        return fail({ParseErrorKind::kDuplicateDimension, dim, 0,
                     static_cast<int>(i)});
      }
      if (dim > expected) {
        return fail({ParseErrorKind::kOutOfOrder, dim, expected,
                     static_cast<int>(i)});
      }
      const size_t open_pos = i;
      ++i;
      std::vector<TokenId> content;
      while (i < n && !Vocabulary::is_delimiter(tokens[i])) {
        content.push_back(tokens[i]);
        ++i;
      }
      if (i == n) {
        // segment never closed
        return fail({ParseErrorKind::kUnbalancedDelimiter, dim, 0,
                     static_cast<int>(open_pos)});
      }
      if (tokens[i] != Vocabulary::close_id(dim)) {
        // nested open or mismatched close inside the segment
        return fail({ParseErrorKind::kUnbalancedDelimiter,
                     Vocabulary::delimiter_dimension(tokens[i]), 0,
                     static_cast<int>(i)});
      }
      res.plan.segment(dim) = std::move(content);
      ++expected;
      ++i;
    } else if (Vocabulary::is_close(tok)) {
      return fail({ParseErrorKind::kUnbalancedDelimiter,
                   Vocabulary::delimiter_dimension(tok), 0,
                   static_cast<int>(i)});
    } else {
      return fail({ParseErrorKind::kStrayToken, 0, 0, static_cast<int>(i)});
    }
  }

  if (expected <= kNumDimensions) {
    return fail({ParseErrorKind::kMissingDimension, expected, 0, -1});
  }
  res.ok = true;
  return res;
}

std::vector<TokenId> serialize_action_plan(const ActionPlan& plan) {
  std::vector<TokenId> out;
  size_t total = kNumDelimiterTokens;
  for (const auto& seg : plan.content) total += seg.size();
  out.reserve(total);
  for (int dim = 1; dim <= kNumDimensions; ++dim) {
    out.push_back(Vocabulary::open_id(dim));
    const auto& seg = plan.segment(dim);
    out.insert(out.end(), seg.begin(), seg.end());
    out.push_back(Vocabulary::close_id(dim));
  }
  return out;
}

int format_reward(std::span<const TokenId> tokens, const Vocabulary& vocab) {
  return parse_action_plan(tokens, vocab).ok ? 1 : 0;
}

std::vector<TokenId> shuffle_dimensions(const ActionPlan& plan, uint64_t seed) {
  std::vector<int> order(kNumDimensions);
  for (int k = 0; k < kNumDimensions; ++k) order[k] = k + 1;

  Rng rng(mix_seed(seed, fnv1a64("shuffle-dimensions")));
  bool identity = true;
  do {
    shuffle_in_place(order, rng);
    identity = true;
    for (int k = 0; k < kNumDimensions; ++k) {
      if (order[k] != k + 1) {
        identity = false;
        break;
      }
    }
  } while (identity);

  std::vector<TokenId> out;
  for (int dim : order) {
    out.push_back(Vocabulary::open_id(dim));
    const auto& seg = plan.segment(dim);
    out.insert(out.end(), seg.begin(), seg.end());
    out.push_back(Vocabulary::close_id(dim));
  }
  return out;
}

std::string tokens_to_line(std::span<const TokenId> tokens,
                           const Vocabulary& vocab) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += token_or_id(vocab, tokens[i]);
  }
  return out;
}

std::vector<TokenId> line_to_tokens(const std::string& line,
                                    const Vocabulary& vocab) {
  std::vector<TokenId> out;
  std::istringstream is(line);
  std::string word;
  while (is >> word) out.push_back(vocab.id_of(word));
  return out;
}

std::string plan_to_json(const ActionPlan& plan, const Vocabulary& vocab) {
  nlohmann::json segments = nlohmann::json::array();
  for (int dim = 1; dim <= kNumDimensions; ++dim) {
    nlohmann::json content = nlohmann::json::array();
    for (TokenId id : plan.segment(dim)) content.push_back(vocab.spelling(id));
    segments.push_back({{"dimension", dim}, {"content", content}});
  }
  return nlohmann::json{{"segments", segments}}.dump();
}

ActionPlan plan_from_json(const std::string& json_text,
                          const Vocabulary& vocab) {
  const auto j = nlohmann::json::parse(json_text);
  ActionPlan plan;
  for (const auto& seg : j.at("segments")) {
    const int dim = seg.at("dimension").get<int>();
    if (dim < 1 || dim > kNumDimensions) {
      throw ConfigError("plan record has dimension out of range: " +
                        std::to_string(dim));
    }
    std::vector<TokenId>& content = plan.segment(dim);
    for (const auto& word : seg.at("content")) {
      content.push_back(vocab.id_of(word.get<std::string>()));
    }
  }
  return plan;
}

}  // namespace planedit
