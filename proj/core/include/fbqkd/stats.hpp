#pragma once

#include <span>

namespace fbqkd::stats {

double mean(std::span<const double> x);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double stddev(std::span<const double> x);
/// Root-mean-square deviation from the mean, relative to the mean.
double relative_rms(std::span<const double> x);

struct MannKendall {
  double s;
  double variance;  // with tie correction
  double z;
  double p_value;   // two-sided
};

/// Mann-Kendall test for a monotone trend. Needs at least three values.
MannKendall mann_kendall(std::span<const double> x);

}  // namespace fbqkd::stats
