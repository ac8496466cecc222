#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace weaksde {

/// Pairwise (cascade) summation. The result depends only on the input order,
/// so reductions over per-path buffers are independent of the thread count.
double pairwise_sum(std::span<const double> values) noexcept;

/// Welford accumulator with Chan's merge. Merging blocks in a fixed order
/// gives results independent of how the blocks were scheduled.
struct RunningMoments {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double x) noexcept {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }

  void merge(const RunningMoments& other) noexcept {
    if (other.n == 0) return;
    if (n == 0) {
      *this = other;
      return;
    }
    const double total = static_cast<double>(n + other.n);
    const double delta = other.mean - mean;
    mean += delta * static_cast<double>(other.n) / total;
    m2 += other.m2 + delta * delta * static_cast<double>(n) * static_cast<double>(other.n) / total;
    n += other.n;
  }

  double variance() const noexcept { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double std_error() const noexcept {
    return n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
  }
};

struct SampleSummary {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  bool single_sample = false;  // std_error is undefined and reported as 0
};

/// Mean and standard error of a buffer, both via pairwise summation.
SampleSummary summarize(std::span<const double> values);

}  // namespace weaksde
