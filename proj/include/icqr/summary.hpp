#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace icqr {

// min / max / mean / std / Q1 / median / Q3 / IQR of a sample.
struct SummaryStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double std = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;

  friend bool operator==(const SummaryStats&, const SummaryStats&) = default;
};

// Quantile of sorted data by linear interpolation between the order
// statistics at positions floor(h) and ceil(h), h = (n - 1) p.
inline double interpolated_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("interpolated_quantile: empty input");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// Sample standard deviation uses the n - 1 denominator (0 for one value).
inline SummaryStats summarize(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("summarize: empty input");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  SummaryStats s;
  s.min = v.front();
  s.max = v.back();
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  s.q1 = interpolated_quantile(v, 0.25);
  s.median = interpolated_quantile(v, 0.5);
  s.q3 = interpolated_quantile(v, 0.75);
  // Interpolation can round a hair outside its bracketing order statistics.
  s.q1 = std::clamp(s.q1, s.min, s.max);
  s.median = std::clamp(s.median, s.q1, s.max);
  s.q3 = std::clamp(s.q3, s.median, s.max);
  s.iqr = s.q3 - s.q1;
  return s;
}

}  // namespace icqr
