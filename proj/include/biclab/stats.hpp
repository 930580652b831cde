#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace biclab {

/// Sufficient statistics of a scalar sample. merge() is plain summation, so a
/// fixed merge order gives bit-identical results.
struct Moments {
  double count = 0.0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double x) {
    count += 1.0;
    sum += x;
    sum_sq += x * x;
  }
  void merge(const Moments& other) {
    count += other.count;
    sum += other.sum;
    sum_sq += other.sum_sq;
  }
  double mean() const { return count > 0.0 ? sum / count : 0.0; }
  /// Unbiased sample variance; 0 when fewer than two observations.
  double variance() const;
  /// Standard error of the mean; NaN when fewer than two observations.
  double standard_error() const;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LinearFit least_squares_line(std::span<const double> x, std::span<const double> y);

double normal_cdf(double x);
double normal_pdf(double x);
double normal_quantile(double p);

/// z for a two-sided interval of the given confidence (0.99 -> 2.5758).
double two_sided_z(double confidence);

}  // namespace biclab
