#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mhmb/rng.h"

namespace mhmb {

// Discretized convolution system for the correction density.
//
// Rows are the X grid X_i = i*h, i in [-2N, 2N]; columns the Y grid
// Y_j = j*h, j in [-N, N]; h = V / N. M(i, j) = Phi((X_i - Y_j) / sigma) and
// v(i) = logistic CDF at X_i, with indices shifted to start at zero.
struct ConvolutionSystem {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd target;
  double spacing = 0.0;
};

ConvolutionSystem build_system(double sigma, int half_count, double half_range);

// u = (M^T M + lambda I)^{-1} M^T v by Cholesky of the normal equations.
// Throws if the factorization fails (lambda = 0 with singular M^T M).
Eigen::VectorXd solve_ridge(const Eigen::MatrixXd& m, const Eigen::VectorXd& v,
                            double lambda);

// Solves the ridge problem for several lambdas, forming M^T M once.
std::vector<Eigen::VectorXd> solve_ridge_path(const Eigen::MatrixXd& m,
                                              const Eigen::VectorXd& v,
                                              std::span<const double> lambdas);

// max_i |h * sum_j M(i, j) u_j - v_i|. With u a density on the Y grid the
// h-weighted sum is the quadrature of the convolution.
double linf_residual(const Eigen::MatrixXd& m, const Eigen::VectorXd& u,
                     const Eigen::VectorXd& v, double h = 1.0);

// Density of the correction variable on the Y grid plus its CDF.
//
// Entry j of `density` is the density at Y_j = (j - N) * h and stands for
// the cell [Y_j - h/2, Y_j + h/2]; `cdf` holds the 2N+2 cumulative masses at
// the cell edges, starting at 0 and ending at 1.
struct CorrectionTable {
  double sigma = 1.0;
  double lambda = 10.0;
  int half_count = 0;
  double half_range = 0.0;
  std::vector<double> density;
  std::vector<double> cdf;
  double linf_residual = 0.0;

  double spacing() const { return half_range / half_count; }
  double y(std::size_t j) const {
    return (static_cast<double>(j) - half_count) * spacing();
  }
  double mean() const;
  double variance() const;

  friend bool operator==(const CorrectionTable&, const CorrectionTable&) = default;
};

// Symmetrizes u_j with u_{-j}, clips negatives, renormalizes so that
// h * sum = 1 and accumulates the cell CDF. The residual field is left at 0;
// build_correction fills it. Throws when nothing positive is left.
CorrectionTable finalize_density(std::span<const double> u, double h);

struct CorrectionBuild {
  CorrectionTable table;
  // Residual of the raw ridge solution, before symmetrization and clipping.
  double solver_residual = 0.0;
};

// Full pipeline: system, ridge solve, finalization, residual of the stored
// density. The ridge unknowns are cell masses (density * h).
CorrectionBuild build_correction(double sigma, double lambda, int half_count,
                                 double half_range);

// Recomputes the residual of the stored density against a fresh system.
double recompute_residual(const CorrectionTable& table);

// Inverse-transform sample, piecewise uniform within each cell and clamped
// to [-V, V].
double sample_correction(const CorrectionTable& table, Rng& rng);

// Same as sample_correction for a given uniform draw.
double correction_quantile(const CorrectionTable& table, double uniform);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

std::string serialize_table(const CorrectionTable& table);
CorrectionTable parse_table(std::string_view text);
void save_table(const CorrectionTable& table, const std::filesystem::path& path);
CorrectionTable load_table(const std::filesystem::path& path);

// Builds the cell CDF from a density; shared by finalization and loading.
std::vector<double> cell_cdf(std::span<const double> density, double h);

// Throws when the table invariants (non-negative density, unit mass,
// monotone CDF) do not hold.
void check_table(const CorrectionTable& table);

}  // namespace mhmb
