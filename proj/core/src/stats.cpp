#include "fbqkd/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fbqkd/error.hpp"

namespace fbqkd::stats {

double mean(std::span<const double> x) {
  if (x.empty()) throw InsufficientData("mean of an empty series");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double stddev(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

double relative_rms(std::span<const double> x) {
  const double m = mean(x);
  if (m == 0.0) throw InsufficientData("relative RMS of a zero-mean series");
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size())) / std::abs(m);
}

MannKendall mann_kendall(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 3) throw InsufficientData("Mann-Kendall needs at least three values");
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) s += (x[j] > x[i]) - (x[j] < x[i]);
  std::map<double, int> ties;
  for (double v : x) ++ties[v];
  const double nd = static_cast<double>(n);
  double var = nd * (nd - 1.0) * (2.0 * nd + 5.0);
  for (const auto& [value, t] : ties) {
    if (t > 1) var -= t * (t - 1.0) * (2.0 * t + 5.0);
  }
  var /= 18.0;
  double z = 0.0;
  if (var > 0.0) {
    if (s > 0.0) z = (s - 1.0) / std::sqrt(var);
    if (s < 0.0) z = (s + 1.0) / std::sqrt(var);
  }
  const double p = std::erfc(std::abs(z) / std::sqrt(2.0));
  return {s, var, z, p};
}

}  // namespace fbqkd::stats
