#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace ref {

// Welford accumulator.
struct Running {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double se() const { return std::sqrt(variance() / static_cast<double>(n)); }
};

}  // namespace ref
