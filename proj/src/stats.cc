#include "mhmb/stats.h"

#include <algorithm>

namespace mhmb {

double barker(double s) {
  if (s > 700.0) return 1.0;
  if (s < -700.0) return 0.0;
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

void MomentAccumulator::push(double x) {
  values_.push_back(x);
  const double n = static_cast<double>(values_.size());
  const double d1 = x - mean_;
  mean_ += d1 / n;
  m2_ += d1 * (x - mean_);
}

void MomentAccumulator::clear() {
  values_.clear();
  mean_ = 0.0;
  m2_ = 0.0;
}

double MomentAccumulator::variance() const {
  if (values_.empty()) return 0.0;
  return std::max(0.0, m2_) / static_cast<double>(values_.size());
}

double MomentAccumulator::sem2() const {
  if (values_.empty()) return 0.0;
  return variance() / static_cast<double>(values_.size());
}

bool MomentAccumulator::degenerate() const {
  if (values_.size() < 2) return true;
  const double first = values_.front();
  return std::all_of(values_.begin(), values_.end(),
                     [first](double v) { return v == first; });
}

MomentAccumulator::Moments MomentAccumulator::standardized_moments() const {
  Moments out;
  if (degenerate()) return out;
  const double sd = std::sqrt(variance());
  if (!(sd > 0.0)) return out;
  double s1 = 0.0;
  double s3 = 0.0;
  for (double v : values_) {
    const double z = std::abs(v - mean_) / sd;
    s1 += z;
    s3 += z * z * z;
  }
  const double n = static_cast<double>(values_.size());
  out.m1 = s1 / n;
  out.m3 = s3 / n;
  return out;
}

double clt_error_bound(double m1, double m3, std::size_t b) {
  if (b < 2) throw Error("insufficient batch: CLT bound needs b >= 2");
  return (6.4 * m3 + 2.0 * m1) / std::sqrt(static_cast<double>(b));
}

double ks_distance(std::span<const double> sorted,
                   const std::function<double(double)>& cdf) {
  if (sorted.empty()) throw Error("ks_distance: empty sample");
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    const double below = static_cast<double>(i) / n;
    const double above = static_cast<double>(i + 1) / n;
    d = std::max({d, std::abs(f - below), std::abs(above - f)});
  }
  return d;
}

}  // namespace mhmb
