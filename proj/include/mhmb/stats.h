#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mhmb/rng.h"

namespace mhmb {

// Library-wide error type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kPi = 3.14159265358979323846;
// Variance of the standard logistic distribution, pi^2 / 3.
inline constexpr double kLogisticVariance = kPi * kPi / 3.0;

// Barker acceptance function 1 / (1 + exp(-s)). Saturates to exactly 0 or 1
// for |s| > 700. NaN propagates.
double barker(double s);

// Standard logistic CDF (same function as barker, named for its other role).
inline double logistic_cdf(double x) { return barker(x); }

// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Inverse logistic CDF, log(v / (1 - v)).
inline double logit(double v) { return std::log(v / (1.0 - v)); }

// Draw from the standard logistic distribution by inversion.
inline double sample_logistic(Rng& rng) { return logit(rng.uniform()); }

// log(1 + exp(x)) without overflow.
inline double log1p_exp(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Streaming statistics of the per-datum log-likelihood-ratio terms.
//
// The mean and squared deviations are updated online (Welford). The absolute
// moments need the final mean, so pushed values are retained and the
// standardized moments are computed by a pass at query time.
class MomentAccumulator {
 public:
  void push(double x);
  void push(std::span<const double> xs) {
    for (double x : xs) push(x);
  }
  void clear();

  std::size_t count() const { return values_.size(); }
  double mean() const { return mean_; }
  double sum_squared_deviations() const { return m2_; }

  // (1/b) * sum (x_i - mean)^2.
  double variance() const;
  // Squared standard error of the mean: (1/b^2) * sum (x_i - mean)^2.
  double sem2() const;

  // True when every pushed value is identical (or fewer than two values).
  bool degenerate() const;

  struct Moments {
    double m1 = 0.0;  // E|z|
    double m3 = 0.0;  // E|z|^3
  };
  // Absolute moments of the deviations standardized by sqrt(variance()).
  // Zero for degenerate batches.
  Moments standardized_moments() const;

  std::span<const double> values() const { return values_; }

 private:
  std::vector<double> values_;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Quantitative CLT bound (6.4 * m3 + 2 * m1) / sqrt(b) on the CDF distance
// between the standardized batch mean and a normal. Throws for b < 2.
double clt_error_bound(double m1, double m3, std::size_t b);

// sup |F_n - cdf| over the sample points, checking both sides of each step.
// `sorted` must be ascending and non-empty.
double ks_distance(std::span<const double> sorted,
                   const std::function<double(double)>& cdf);

}  // namespace mhmb
