#pragma once

// Shared test utilities: small vocabularies, random plan generation, and the
// central-difference gradient checker used against every hand-written
// gradient in the project.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "planedit/grammar.hpp"
#include "planedit/util.hpp"

namespace planedit::test {

inline Vocabulary small_vocab(int content_tokens = 12) {
  std::vector<std::string> content;
  for (int i = 0; i < content_tokens; ++i) {
    content.push_back("tok-" + std::to_string(i));
  }
  return Vocabulary(content);
}

inline TokenId content_id(const Vocabulary& vocab, int i) {
  return static_cast<TokenId>(kNumDelimiterTokens + i);
}

inline ActionPlan random_plan(const Vocabulary& vocab, Rng& rng,
                              int max_per_segment = 3) {
  ActionPlan plan;
  for (int dim = 1; dim <= kNumDimensions; ++dim) {
    const size_t count = uniform_index(rng, max_per_segment + 1);
    for (size_t c = 0; c < count; ++c) {
      plan.segment(dim).push_back(content_id(
          vocab, static_cast<int>(uniform_index(rng, vocab.content_size()))));
    }
  }
  return plan;
}

// Central-difference check: |analytic - numeric| / max(1, |a|, |n|).
// Returns the worst relative error over all coordinates.
inline double max_grad_rel_error(std::vector<double>& params,
                                 const std::vector<double>& analytic,
                                 const std::function<double()>& value,
                                 double h = 1e-5) {
  double worst = 0.0;
  for (size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double up = value();
    params[i] = saved - h;
    const double down = value();
    params[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom =
        std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace planedit::test
