#pragma once

#include <span>

#include "dpdlgmm/stick_posterior.hpp"
#include "dpdlgmm/types.hpp"

namespace dpdlgmm {

/// Gaussian with diagonal covariance. `var` holds the diagonal.
struct DiagGaussian {
  Vector mean;
  Vector var;

  int dim() const { return static_cast<int>(mean.size()); }
  void validate() const;
};

/// Shape parameters of a Beta distribution.
struct BetaParams {
  double a = 1.0;
  double b = 1.0;
};

// Scalar special functions. Both throw std::domain_error for x <= 0.
double ln_gamma(double x);
double digamma(double x);

/// ln sum exp(v). -inf entries are ignored; returns -inf when all are -inf.
/// Throws std::invalid_argument on an empty input.
double log_sum_exp(std::span<const double> v);
double log_sum_exp(const Vector& v);

/// KL(q || p) between diagonal Gaussians.
double kl_diag_gaussian(const DiagGaussian& q, const DiagGaussian& p);

/// KL(q || p) between Beta distributions.
double kl_beta(const BetaParams& q, const BetaParams& p);

/// Differential entropy of N(., diag(var)).
double gaussian_entropy_diag(const Vector& var);

/// ln N(x; g.mean, diag(g.var)).
double gaussian_log_pdf_diag(const Vector& x, const DiagGaussian& g);

/// E_q[ln pi_t] under the truncated stick posterior (t is 0-based).
double expected_log_pi(const StickPosterior& gamma, int t);

/// E_q[ln pi_t] for every t = 0..T-1.
Vector expected_log_pi_all(const StickPosterior& gamma);

/// E_q[pi_t] = E[beta_t] * prod_{l<t} E[1 - beta_l], with beta_{T-1} = 1.
/// Sums to one.
Vector expected_stick_weights(const StickPosterior& gamma);

/// softplus(x) = ln(1 + e^x), computed without overflow.
double softplus(double x);
double sigmoid(double x);

/// Variance parameterization shared by recognition heads and layer noise:
/// var = max(softplus(raw)^2, kVarianceFloor).
double variance_from_raw(double raw);
/// d var / d raw; zero where the floor is active.
double variance_from_raw_grad(double raw);
/// Inverse of variance_from_raw for var above the floor.
double raw_from_variance(double var);

}  // namespace dpdlgmm
