#pragma once

#include <vector>

namespace cgr::stats {

double mean(const std::vector<double>& xs);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sample_sd(const std::vector<double>& xs);
/// Linear-interpolation quantile (R type 7). Throws on an empty input or p
/// outside [0, 1].
double quantile(std::vector<double> xs, double p);
double median(const std::vector<double>& xs);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Normal-approximation 95% interval: mean -+ 1.96 sd / sqrt(n).
Interval ci95(const std::vector<double>& xs);

struct BoxStats {
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  /// Smallest and largest values within 1.5 IQR of the quartiles.
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  std::size_t count = 0;
};

BoxStats box_stats(const std::vector<double>& xs);

}  // namespace cgr::stats
