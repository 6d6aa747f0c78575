#include "mhmb/model.h"

#include <algorithm>
#include <cmath>

#include "mhmb/stats.h"

namespace mhmb {

TargetModel::TargetModel(std::shared_ptr<const Dataset> data) : data_(std::move(data)) {
  if (!data_ || data_->size() == 0) throw Error("model: dataset must be non-empty");
}

void TargetModel::log_ratio_terms(std::span<const std::size_t> idx,
                                  std::span<const double> theta,
                                  std::span<const double> theta_new,
                                  std::span<double> out) const {
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out[k] = loglike_term(idx[k], theta_new) - loglike_term(idx[k], theta);
  }
}

void TargetModel::log_ratio_all(std::span<const double> theta,
                                std::span<const double> theta_new,
                                std::span<double> out) const {
  constexpr std::size_t kChunk = 4096;
  std::vector<std::size_t> idx(kChunk);
  const std::size_t n = data_size();
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t len = std::min(kChunk, n - start);
    for (std::size_t k = 0; k < len; ++k) idx[k] = start + k;
    log_ratio_terms(std::span(idx.data(), len), theta, theta_new, out.subspan(start, len));
  }
}

double Posterior::lambda_term(std::size_t i, std::span<const double> theta,
                              std::span<const double> theta_new) const {
  double out = 0.0;
  lambda_terms(std::span(&i, 1), theta, theta_new, std::span(&out, 1));
  return out;
}

void Posterior::lambda_terms(std::span<const std::size_t> idx,
                             std::span<const double> theta,
                             std::span<const double> theta_new,
                             std::span<double> out) const {
  model->log_ratio_terms(idx, theta, theta_new, out);
  const double scale = static_cast<double>(size()) / temperature;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out[k] *= scale;
    if (!std::isfinite(out[k])) {
      throw Error("non-finite log-likelihood ratio at datum " + std::to_string(idx[k]));
    }
  }
}

void Posterior::lambda_all(std::span<const double> theta,
                           std::span<const double> theta_new,
                           std::span<double> out) const {
  model->log_ratio_all(theta, theta_new, out);
  const double scale = static_cast<double>(size()) / temperature;
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] *= scale;
    if (!std::isfinite(out[k])) {
      throw Error("non-finite log-likelihood ratio at datum " + std::to_string(k));
    }
  }
}

double Posterior::log_density(std::span<const double> theta) const {
  double s = 0.0;
  for (std::size_t i = 0; i < size(); ++i) s += model->loglike_term(i, theta);
  return model->log_prior(theta) + s / temperature;
}

double psi(double u, const TargetModel& model, std::span<const double> theta,
           std::span<const double> theta_new) {
  if (!(u > 0.0) || u > 1.0) throw Error("psi: u must lie in (0, 1]");
  return std::log(u) + model.log_prior(theta) - model.log_prior(theta_new);
}

// Gaussian mean ------------------------------------------------------------

GaussianMeanModel::GaussianMeanModel(std::shared_ptr<const Dataset> data)
    : TargetModel(std::move(data)) {
  if (this->data().cols != 1) throw Error("gaussian_mean: expects scalar data");
}

double GaussianMeanModel::loglike_term(std::size_t i, std::span<const double> theta) const {
  return term(data().scalar(i), theta[0]);
}

void GaussianMeanModel::log_ratio_terms(std::span<const std::size_t> idx,
                                        std::span<const double> theta,
                                        std::span<const double> theta_new,
                                        std::span<double> out) const {
  // (theta' - theta) * (x - theta - (theta' - theta) / 2)
  const double d = theta_new[0] - theta[0];
  const double mid = 0.5 * (theta[0] + theta_new[0]);
  const double* x = data().features.data();
  for (std::size_t k = 0; k < idx.size(); ++k) out[k] = d * (x[idx[k]] - mid);
}

// Mixture --------------------------------------------------------------------

MixtureModel::MixtureModel(std::shared_ptr<const Dataset> data)
    : TargetModel(std::move(data)) {
  if (this->data().cols != 1) throw Error("mixture: expects scalar data");
}

double MixtureModel::log_prior(std::span<const double> theta) const {
  return -theta[0] * theta[0] / (2.0 * kPriorVar1) - theta[1] * theta[1] / (2.0 * kPriorVar2);
}

double MixtureModel::term(double x, double theta1, double theta2) {
  const double a = -(x - theta1) * (x - theta1) / (2.0 * kNoiseVar);
  const double b = -(x - theta1 - theta2) * (x - theta1 - theta2) / (2.0 * kNoiseVar);
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  // log(0.5 e^a + 0.5 e^b) - 0.5 log(2 pi sigma_x^2)
  return hi + std::log1p(std::exp(lo - hi)) - std::log(2.0) -
         0.5 * std::log(2.0 * kPi * kNoiseVar);
}

double MixtureModel::loglike_term(std::size_t i, std::span<const double> theta) const {
  return term(data().scalar(i), theta[0], theta[1]);
}

void MixtureModel::log_ratio_terms(std::span<const std::size_t> idx,
                                   std::span<const double> theta,
                                   std::span<const double> theta_new,
                                   std::span<double> out) const {
  const double* x = data().features.data();
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const double xi = x[idx[k]];
    out[k] = term(xi, theta_new[0], theta_new[1]) - term(xi, theta[0], theta[1]);
  }
}

// Logistic regression ----------------------------------------------------------

LogisticRegressionModel::LogisticRegressionModel(std::shared_ptr<const Dataset> data)
    : TargetModel(std::move(data)) {
  if (!this->data().labels || this->data().labels->size() != this->data().rows) {
    throw Error("logistic: dataset needs one label per row");
  }
}

double LogisticRegressionModel::term_from_margin(double margin) {
  return -log1p_exp(-margin);
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace

double LogisticRegressionModel::loglike_term(std::size_t i,
                                             std::span<const double> theta) const {
  if (theta.size() != dimension()) throw Error("logistic: dimension mismatch");
  const double y = (*data().labels)[i];
  return term_from_margin(y * dot(data().row(i), theta));
}

void LogisticRegressionModel::log_ratio_terms(std::span<const std::size_t> idx,
                                              std::span<const double> theta,
                                              std::span<const double> theta_new,
                                              std::span<double> out) const {
  if (theta.size() != dimension() || theta_new.size() != dimension()) {
    throw Error("logistic: dimension mismatch");
  }
  const auto& labels = *data().labels;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto x = data().row(idx[k]);
    double m_old = 0.0;
    double m_new = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) {
      m_old += x[c] * theta[c];
      m_new += x[c] * theta_new[c];
    }
    const double y = labels[idx[k]];
    out[k] = term_from_margin(y * m_new) - term_from_margin(y * m_old);
  }
}

// Proposal ---------------------------------------------------------------------

RandomWalkProposal::RandomWalkProposal(std::vector<double> stddev)
    : stddev_(std::move(stddev)) {
  for (double s : stddev_) {
    if (!(s >= 0.0)) throw Error("proposal: standard deviations must be >= 0");
  }
}

RandomWalkProposal RandomWalkProposal::from_covariance(std::span<const double> diag_cov) {
  std::vector<double> sd;
  sd.reserve(diag_cov.size());
  for (double c : diag_cov) {
    if (!(c >= 0.0)) throw Error("proposal: covariance entries must be >= 0");
    sd.push_back(std::sqrt(c));
  }
  return RandomWalkProposal(std::move(sd));
}

RandomWalkProposal RandomWalkProposal::isotropic(std::size_t dim, double stddev) {
  return RandomWalkProposal(std::vector<double>(dim, stddev));
}

Theta RandomWalkProposal::propose(std::span<const double> theta, Rng& rng) const {
  if (theta.size() != stddev_.size()) throw Error("proposal: dimension mismatch");
  Theta out(theta.begin(), theta.end());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += stddev_[k] * rng.normal();
  return out;
}

}  // namespace mhmb
