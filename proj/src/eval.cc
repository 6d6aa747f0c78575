#include "mhmb/eval.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "mhmb/stats.h"

namespace mhmb {
namespace {

// Midpoint-rule mass of one rectangle, scaled by exp(-ref).
double rect_mass(const LogDensity2D& f, double x0, double y0, double dx, double dy,
                 std::size_t sub, double ref) {
  const double hx = dx / static_cast<double>(sub);
  const double hy = dy / static_cast<double>(sub);
  double acc = 0.0;
  for (std::size_t a = 0; a < sub; ++a) {
    const double x = x0 + (static_cast<double>(a) + 0.5) * hx;
    for (std::size_t c = 0; c < sub; ++c) {
      const double y = y0 + (static_cast<double>(c) + 0.5) * hy;
      acc += std::exp(f(x, y) - ref);
    }
  }
  return acc * hx * hy;
}

}  // namespace

std::optional<std::size_t> Grid2D::bin_of(double x, double y) const {
  if (!(x >= x_lo && x < x_hi && y >= y_lo && y < y_hi)) return std::nullopt;
  auto ix = static_cast<std::size_t>((x - x_lo) / dx());
  auto iy = static_cast<std::size_t>((y - y_lo) / dy());
  ix = std::min(ix, nx - 1);
  iy = std::min(iy, ny - 1);
  return ix * ny + iy;
}

BinProbabilities true_bin_probs(const LogDensity2D& log_density, const Grid2D& grid,
                                std::size_t sub) {
  if (grid.nx == 0 || grid.ny == 0 || !(grid.x_hi > grid.x_lo) || !(grid.y_hi > grid.y_lo)) {
    throw Error("true_bin_probs: empty grid");
  }
  if (sub == 0) throw Error("true_bin_probs: sub must be >= 1");
  const double dx = grid.dx(), dy = grid.dy();

  // Reference level: the largest value at the bin centres, so exp() stays
  // in range.
  double ref = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.nx; ++i) {
    for (std::size_t j = 0; j < grid.ny; ++j) {
      ref = std::max(ref, log_density(grid.x_lo + (i + 0.5) * dx, grid.y_lo + (j + 0.5) * dy));
    }
  }
  if (!std::isfinite(ref)) throw Error("true_bin_probs: density is zero or undefined on the grid");

  BinProbabilities out;
  out.p.resize(grid.bins());
  double inside = 0.0;
  for (std::size_t i = 0; i < grid.nx; ++i) {
    for (std::size_t j = 0; j < grid.ny; ++j) {
      const double m = rect_mass(log_density, grid.x_lo + i * dx, grid.y_lo + j * dy, dx, dy, sub, ref);
      out.p[i * grid.ny + j] = m;
      inside += m;
    }
  }

  // Frame of the same bin size, one grid extent wide on each side, at a
  // coarser resolution. Only used for the coverage check.
  const std::size_t frame_sub = std::max<std::size_t>(2, sub / 4);
  const double wx = grid.x_hi - grid.x_lo, wy = grid.y_hi - grid.y_lo;
  double outside = 0.0;
  for (std::size_t i = 0; i < 3 * grid.nx; ++i) {
    for (std::size_t j = 0; j < 3 * grid.ny; ++j) {
      const bool inner = i >= grid.nx && i < 2 * grid.nx && j >= grid.ny && j < 2 * grid.ny;
      if (inner) continue;
      outside += rect_mass(log_density, grid.x_lo - wx + i * dx, grid.y_lo - wy + j * dy, dx, dy,
                           frame_sub, ref);
    }
  }
  out.mass_inside = inside / (inside + outside);
  if (out.mass_inside < 0.999) {
    throw Error("true_bin_probs: grid covers only " + std::to_string(out.mass_inside) +
                " of the posterior mass; enlarge the grid bounds");
  }
  for (double& v : out.p) v /= inside;
  return out;
}

LogDensity2D mixture_log_posterior(const MixtureModel& model, double temperature, double width) {
  if (!(width > 0.0)) throw Error("mixture_log_posterior: width must be > 0");
  if (!(temperature > 0.0)) throw Error("mixture_log_posterior: temperature must be > 0");
  const Dataset& data = model.data();
  // Bin key -> (count, sum). std::map keeps the summation order fixed.
  std::map<long long, std::pair<double, double>> bins;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double x = data.scalar(i);
    auto& b = bins[static_cast<long long>(std::floor(x / width))];
    b.first += 1.0;
    b.second += x;
  }
  std::vector<double> counts, centers;
  counts.reserve(bins.size());
  centers.reserve(bins.size());
  for (const auto& [key, b] : bins) {
    counts.push_back(b.first);
    centers.push_back(b.second / b.first);
  }
  const double inv_k = 1.0 / temperature;
  return [counts = std::move(counts), centers = std::move(centers), inv_k](double t1, double t2) {
    double ll = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      ll += counts[k] * MixtureModel::term(centers[k], t1, t2);
    }
    const double prior = -t1 * t1 / (2.0 * MixtureModel::kPriorVar1) -
                         t2 * t2 / (2.0 * MixtureModel::kPriorVar2);
    return prior + inv_k * ll;
  };
}

std::vector<std::size_t> bin_counts(const ChainResult& chain, const Grid2D& grid,
                                    std::size_t burn_in) {
  if (chain.dimension != 2) throw Error("bin_counts: chain must be two-dimensional");
  std::vector<std::size_t> counts(grid.bins(), 0);
  for (std::size_t t = burn_in; t < chain.size(); ++t) {
    const auto s = chain.sample(t);
    if (auto b = grid.bin_of(s[0], s[1])) ++counts[*b];
  }
  return counts;
}

MetricValue poisson_loglike(std::span<const std::size_t> counts, std::span<const double> p,
                            double n) {
  if (counts.size() != p.size()) throw Error("poisson_loglike: size mismatch");
  MetricValue out;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    const double c = static_cast<double>(counts[j]);
    const double rate = n * p[j];
    if (c > 0.0 && !(rate > 0.0)) {
      out.impossible = true;
      continue;
    }
    // glibc lgamma is accurate to a few ulp for positive arguments.
    out.value += (c > 0.0 ? c * std::log(rate) : 0.0) - rate - std::lgamma(c + 1.0);
  }
  if (out.impossible) out.value = 0.0;
  return out;
}

MetricValue chi_squared(std::span<const std::size_t> counts, std::span<const double> p,
                        double n) {
  if (counts.size() != p.size()) throw Error("chi_squared: size mismatch");
  MetricValue out;
  double pooled_c = 0.0, pooled_e = 0.0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    const double c = static_cast<double>(counts[j]);
    const double e = n * p[j];
    if (e >= kChiSquaredFloor) {
      out.value += (c - e) * (c - e) / e;
    } else {
      pooled_c += c;
      pooled_e += std::max(e, 0.0);
    }
  }
  if (pooled_c > 0.0 || pooled_e > 0.0) {
    if (pooled_e > 0.0) {
      out.value += (pooled_c - pooled_e) * (pooled_c - pooled_e) / pooled_e;
    } else {
      out.impossible = true;
      out.value = 0.0;
    }
  }
  return out;
}

double tv_distance(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  if (a.size() != b.size()) throw Error("tv_distance: size mismatch");
  double na = 0.0, nb = 0.0;
  for (auto c : a) na += static_cast<double>(c);
  for (auto c : b) nb += static_cast<double>(c);
  if (na == 0.0 || nb == 0.0) throw Error("tv_distance: empty count vector");
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    s += std::abs(static_cast<double>(a[j]) / na - static_cast<double>(b[j]) / nb);
  }
  return 0.5 * s;
}

double classification_accuracy(std::span<const double> theta, const Dataset& test) {
  if (!test.labels) throw Error("accuracy: test set has no labels");
  if (theta.size() != test.cols) throw Error("accuracy: dimension mismatch");
  if (test.rows == 0) throw Error("accuracy: empty test set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.rows; ++i) {
    const auto x = test.row(i);
    double dot = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) dot += theta[k] * x[k];
    const int predicted = dot > 0.0 ? 1 : -1;  // ties go to the negative class
    if (predicted == (*test.labels)[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.rows);
}

std::vector<AccuracyPoint> accuracy_curve(const ChainResult& chain, const Dataset& test) {
  std::vector<AccuracyPoint> out;
  out.reserve(chain.size());
  std::size_t used = 0;
  for (std::size_t t = 0; t < chain.size(); ++t) {
    used += chain.batch_sizes[t];
    out.push_back({used, classification_accuracy(chain.sample(t), test)});
  }
  return out;
}

}  // namespace mhmb
