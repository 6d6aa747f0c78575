#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mhmb/dataset.h"
#include "mhmb/rng.h"

namespace mhmb {

using Theta = std::vector<double>;

// An untempered Bayesian model: prior plus per-datum log-likelihood over a
// shared, read-only dataset. Additive constants that cancel in every ratio
// may be dropped; each model says which.
class TargetModel {
 public:
  virtual ~TargetModel() = default;

  virtual std::string name() const = 0;
  virtual std::size_t dimension() const = 0;
  std::size_t data_size() const { return data_->size(); }
  const Dataset& data() const { return *data_; }

  virtual double log_prior(std::span<const double> theta) const = 0;
  virtual double loglike_term(std::size_t i, std::span<const double> theta) const = 0;

  // out[k] = loglike_term(idx[k], theta') - loglike_term(idx[k], theta).
  // Overridden where the difference has a cheaper or more accurate form.
  virtual void log_ratio_terms(std::span<const std::size_t> idx,
                               std::span<const double> theta,
                               std::span<const double> theta_new,
                               std::span<double> out) const;

  // The same over the whole dataset, in index order.
  void log_ratio_all(std::span<const double> theta, std::span<const double> theta_new,
                     std::span<double> out) const;

 protected:
  explicit TargetModel(std::shared_ptr<const Dataset> data);

 private:
  std::shared_ptr<const Dataset> data_;
};

// A model at temperature K: likelihood terms carry a 1/K exponent, the prior
// does not.
struct Posterior {
  const TargetModel* model = nullptr;
  double temperature = 1.0;

  std::size_t size() const { return model->data_size(); }

  // Lambda_i = (N / K) * (log p(x_i | theta') - log p(x_i | theta)).
  double lambda_term(std::size_t i, std::span<const double> theta,
                     std::span<const double> theta_new) const;

  // Fills out[k] with Lambda_{idx[k]}; throws on a non-finite term, naming
  // the datum.
  void lambda_terms(std::span<const std::size_t> idx, std::span<const double> theta,
                    std::span<const double> theta_new, std::span<double> out) const;

  // All N terms in index order.
  void lambda_all(std::span<const double> theta, std::span<const double> theta_new,
                  std::span<double> out) const;

  // log p0(theta) + (1/K) sum_i log p(x_i | theta), exact over all data.
  double log_density(std::span<const double> theta) const;
};

// log(u q(theta'|theta) p0(theta) / (q(theta|theta') p0(theta'))) for a
// symmetric proposal. Throws for u outside (0, 1].
double psi(double u, const TargetModel& model, std::span<const double> theta,
           std::span<const double> theta_new);

// Section 2.2 model: x ~ N(theta, 1), flat prior. The log-likelihood term is
// -(x - theta)^2 / 2 with the normalizing constant dropped.
class GaussianMeanModel final : public TargetModel {
 public:
  explicit GaussianMeanModel(std::shared_ptr<const Dataset> data);

  std::string name() const override { return "gaussian_mean"; }
  std::size_t dimension() const override { return 1; }
  double log_prior(std::span<const double>) const override { return 0.0; }
  double loglike_term(std::size_t i, std::span<const double> theta) const override;
  void log_ratio_terms(std::span<const std::size_t> idx, std::span<const double> theta,
                       std::span<const double> theta_new,
                       std::span<double> out) const override;

  static double term(double x, double theta) { return -0.5 * (x - theta) * (x - theta); }
};

// Two-component mixture 0.5 N(theta1, 2) + 0.5 N(theta1 + theta2, 2) with
// prior theta ~ N(0, diag(10, 1)). The likelihood is fully normalized; the
// prior drops its constant.
class MixtureModel final : public TargetModel {
 public:
  explicit MixtureModel(std::shared_ptr<const Dataset> data);

  static constexpr double kPriorVar1 = 10.0;
  static constexpr double kPriorVar2 = 1.0;
  static constexpr double kNoiseVar = 2.0;

  std::string name() const override { return "mixture"; }
  std::size_t dimension() const override { return 2; }
  double log_prior(std::span<const double> theta) const override;
  double loglike_term(std::size_t i, std::span<const double> theta) const override;
  void log_ratio_terms(std::span<const std::size_t> idx, std::span<const double> theta,
                       std::span<const double> theta_new,
                       std::span<double> out) const override;

  // log of the mixture density at x.
  static double term(double x, double theta1, double theta2);
};

// Logistic regression with labels in {-1, +1} and an improper flat prior.
class LogisticRegressionModel final : public TargetModel {
 public:
  explicit LogisticRegressionModel(std::shared_ptr<const Dataset> data);

  std::string name() const override { return "logistic"; }
  std::size_t dimension() const override { return data().cols; }
  double log_prior(std::span<const double>) const override { return 0.0; }
  double loglike_term(std::size_t i, std::span<const double> theta) const override;
  void log_ratio_terms(std::span<const std::size_t> idx, std::span<const double> theta,
                       std::span<const double> theta_new,
                       std::span<double> out) const override;

  // -log(1 + exp(-margin)).
  static double term_from_margin(double margin);
};

// Symmetric Gaussian random walk with independent coordinates.
class RandomWalkProposal {
 public:
  RandomWalkProposal() = default;
  // Per-coordinate standard deviations.
  explicit RandomWalkProposal(std::vector<double> stddev);
  static RandomWalkProposal from_covariance(std::span<const double> diag_cov);
  static RandomWalkProposal isotropic(std::size_t dim, double stddev);

  Theta propose(std::span<const double> theta, Rng& rng) const;
  std::span<const double> stddev() const { return stddev_; }

  // log q(theta'|theta) - log q(theta|theta'), zero for this proposal.
  double log_ratio(std::span<const double>, std::span<const double>) const { return 0.0; }

 private:
  std::vector<double> stddev_;
};

}  // namespace mhmb
