#include "planedit/util.hpp"

#include <algorithm>
#include <thread>

namespace planedit {

uint64_t fnv1a64(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double population_std(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

bool all_finite(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(),
                     [](double x) { return std::isfinite(x); });
}

TrendTest kendall_trend(std::span<const double> xs) {
  TrendTest out;
  const size_t n = xs.size();
  if (n < 2) return out;

  // Index order has no ties, so only value ties need adjustment (tau-b).
  long long concordant = 0, discordant = 0, ties = 0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      if (xs[j] > xs[i]) {
        ++concordant;
      } else if (xs[j] < xs[i]) {
        ++discordant;
      } else {
        ++ties;
      }
    }
  }
  const double total = static_cast<double>(n) * (n - 1) / 2.0;
  const double denom = std::sqrt(total * (total - static_cast<double>(ties)));
  if (denom <= 0.0) return out;
  out.tau = static_cast<double>(concordant - discordant) / denom;

  // Normal approximation for the null distribution of tau.
  const double var =
      (2.0 * (2.0 * n + 5.0)) / (9.0 * n * (n - 1.0));
  out.z = out.tau / std::sqrt(var);
  out.p_one_sided = 0.5 * std::erfc(out.z / std::numbers::sqrt2);
  return out;
}

void parallel_for(size_t n, int workers,
                  const std::function<void(size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const size_t w = std::min<size_t>(static_cast<size_t>(workers), n);
  std::vector<std::thread> threads;
  threads.reserve(w);
  for (size_t t = 0; t < w; ++t) {
    threads.emplace_back([&, t] {
      for (size_t i = t; i < n; i += w) fn(i);
    });
  }
  for (auto& th : threads) th.join();
}

}  // namespace planedit
