#include "cgr/stats.hpp"

#include <algorithm>
#include <cmath>

#include "cgr/common.hpp"

namespace cgr::stats {

double mean(const std::vector<double>& xs) {
  if (xs.empty()) throw ContractError("mean of an empty sample");
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

double sample_sd(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double quantile(std::vector<double> xs, double p) {
  if (xs.empty()) throw ContractError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw ContractError("quantile level outside [0, 1]");
  std::sort(xs.begin(), xs.end());
  const double h = (static_cast<double>(xs.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

double median(const std::vector<double>& xs) { return quantile(xs, 0.5); }

Interval ci95(const std::vector<double>& xs) {
  const double m = mean(xs);
  const double half = 1.96 * sample_sd(xs) / std::sqrt(static_cast<double>(xs.size()));
  return {m - half, m + half};
}

BoxStats box_stats(const std::vector<double>& xs) {
  BoxStats b;
  b.q25 = quantile(xs, 0.25);
  b.median = quantile(xs, 0.5);
  b.q75 = quantile(xs, 0.75);
  b.count = xs.size();
  const double iqr = b.q75 - b.q25;
  const double lo_fence = b.q25 - 1.5 * iqr;
  const double hi_fence = b.q75 + 1.5 * iqr;
  bool any = false;
  for (double x : xs) {
    if (x < lo_fence || x > hi_fence) continue;
    if (!any) {
      b.whisker_low = b.whisker_high = x;
      any = true;
    }
    b.whisker_low = std::min(b.whisker_low, x);
    b.whisker_high = std::max(b.whisker_high, x);
  }
  return b;
}

}  // namespace cgr::stats
