#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mhmb/chain.h"
#include "mhmb/dataset.h"
#include "mhmb/model.h"

namespace mhmb {

// Regular 2-D grid of bins over [x_lo, x_hi] x [y_lo, y_hi], row-major in x.
struct Grid2D {
  double x_lo = -1.5, x_hi = 2.5;
  double y_lo = -3.0, y_hi = 3.0;
  std::size_t nx = 50, ny = 50;

  std::size_t bins() const { return nx * ny; }
  double dx() const { return (x_hi - x_lo) / static_cast<double>(nx); }
  double dy() const { return (y_hi - y_lo) / static_cast<double>(ny); }
  // Bin of a point, or nothing when it falls outside the grid.
  std::optional<std::size_t> bin_of(double x, double y) const;
};

using LogDensity2D = std::function<double(double, double)>;

struct BinProbabilities {
  std::vector<double> p;
  // Fraction of the posterior mass inside the grid, estimated against a
  // frame one grid-width wide on every side.
  double mass_inside = 1.0;
};

// Per-bin probabilities of an unnormalized log density by midpoint
// quadrature with `sub` x `sub` points per bin. Throws when more than 0.1% of
// the mass lies outside the grid.
BinProbabilities true_bin_probs(const LogDensity2D& log_density, const Grid2D& grid,
                                std::size_t sub = 16);

// Tempered log posterior of a two-parameter mixture model, with the data
// summarized by a histogram of width `width` (each bin represented by its
// count and the mean of its members). Fast enough for quadrature grids.
LogDensity2D mixture_log_posterior(const MixtureModel& model, double temperature,
                                   double width = 0.01);

std::vector<std::size_t> bin_counts(const ChainResult& chain, const Grid2D& grid,
                                    std::size_t burn_in = 0);

// Value of a metric, or the explicit "impossible" outcome (a non-empty bin
// with zero probability).
struct MetricValue {
  double value = 0.0;
  bool impossible = false;
};

// sum_j c_j log(n P_j) - n P_j - log Gamma(c_j + 1).
MetricValue poisson_loglike(std::span<const std::size_t> counts, std::span<const double> p,
                            double n);

inline constexpr double kChiSquaredFloor = 1e-8;

// Pearson statistic over bins with n P_j >= floor; bins below the floor are
// pooled into one catch-all bin.
MetricValue chi_squared(std::span<const std::size_t> counts, std::span<const double> p,
                        double n);

// Half the L1 distance between the normalized count vectors.
double tv_distance(std::span<const std::size_t> a, std::span<const std::size_t> b);

struct AccuracyPoint {
  std::size_t cumulative_data = 0;
  double accuracy = 0.0;
};

// Test accuracy of sign(<theta_t, x>) for every sample, with ties assigned
// to the negative class, against cumulative data consumed.
std::vector<AccuracyPoint> accuracy_curve(const ChainResult& chain, const Dataset& test);

double classification_accuracy(std::span<const double> theta, const Dataset& test);

}  // namespace mhmb
