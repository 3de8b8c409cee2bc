#include "dpdlgmm/special_math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dpdlgmm {

namespace {

// Below this point the special functions are shifted upwards by recurrence
// before the asymptotic series is applied.
constexpr double kAsymptoticThreshold = 10.0;

const double kHalfLogTwoPi = 0.5 * std::log(2.0 * std::numbers::pi);

void require_positive(double x, const char* what) {
  if (!(x > 0.0)) {
    throw std::domain_error(std::string(what) + ": argument must be > 0, got " +
                            std::to_string(x));
  }
}

void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a) + " vs " + std::to_string(b) +
                                ")");
  }
}

}  // namespace

StickPosterior::StickPosterior(Vector g1, Vector g2)
    : gamma1(std::move(g1)), gamma2(std::move(g2)) {
  validate();
}

StickPosterior StickPosterior::prior(int truncation, double eta) {
  if (truncation < 1) throw std::invalid_argument("truncation must be >= 1");
  require_positive(eta, "StickPosterior::prior eta");
  return StickPosterior(Vector::Ones(truncation - 1),
                        Vector::Constant(truncation - 1, eta));
}

void StickPosterior::validate() const {
  require_same_dim(gamma1.size(), gamma2.size(), "StickPosterior");
  for (Eigen::Index t = 0; t < gamma1.size(); ++t) {
    if (!(gamma1[t] > 0.0) || !(gamma2[t] > 0.0)) {
      throw std::invalid_argument("StickPosterior: parameters must be > 0 at t=" +
                                  std::to_string(t));
    }
  }
}

void DiagGaussian::validate() const {
  require_same_dim(mean.size(), var.size(), "DiagGaussian");
  for (Eigen::Index j = 0; j < var.size(); ++j) {
    if (!(var[j] > 0.0)) {
      throw std::domain_error("DiagGaussian: variance must be > 0 at j=" +
                              std::to_string(j));
    }
  }
}

double ln_gamma(double x) {
  require_positive(x, "ln_gamma");
  double shift = 1.0;
  while (x < kAsymptoticThreshold) {
    shift *= x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Stirling series with Bernoulli coefficients B_{2k} / (2k (2k-1)).
  const double series =
      inv * (1.0 / 12.0 +
             inv2 * (-1.0 / 360.0 +
                     inv2 * (1.0 / 1260.0 +
                             inv2 * (-1.0 / 1680.0 +
                                     inv2 * (1.0 / 1188.0 +
                                             inv2 * (-691.0 / 360360.0 +
                                                     inv2 * (1.0 / 156.0)))))));
  return (x - 0.5) * std::log(x) - x + kHalfLogTwoPi + series - std::log(shift);
}

double digamma(double x) {
  require_positive(x, "digamma");
  double acc = 0.0;
  while (x < kAsymptoticThreshold) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv2 = 1.0 / (x * x);
  const double series =
      inv2 * (1.0 / 12.0 -
              inv2 * (1.0 / 120.0 -
                      inv2 * (1.0 / 252.0 -
                              inv2 * (1.0 / 240.0 -
                                      inv2 * (1.0 / 132.0 -
                                              inv2 * (691.0 / 32760.0 -
                                                      inv2 * (1.0 / 12.0)))))));
  return acc + std::log(x) - 0.5 / x - series;
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("log_sum_exp: empty input");
  const double hi = *std::max_element(v.begin(), v.end());
  if (hi == -std::numeric_limits<double>::infinity()) return hi;
  if (hi == std::numeric_limits<double>::infinity()) return hi;
  double sum = 0.0;
  for (double e : v) sum += std::exp(e - hi);
  return hi + std::log(sum);
}

double log_sum_exp(const Vector& v) {
  return log_sum_exp(std::span<const double>(v.data(), static_cast<size_t>(v.size())));
}

double kl_diag_gaussian(const DiagGaussian& q, const DiagGaussian& p) {
  require_same_dim(q.mean.size(), p.mean.size(), "kl_diag_gaussian");
  q.validate();
  p.validate();
  double kl = 0.0;
  for (Eigen::Index j = 0; j < q.mean.size(); ++j) {
    const double d = q.mean[j] - p.mean[j];
    kl += std::log(p.var[j] / q.var[j]) + (q.var[j] + d * d) / p.var[j] - 1.0;
  }
  return std::max(0.5 * kl, 0.0);
}

double kl_beta(const BetaParams& q, const BetaParams& p) {
  require_positive(q.a, "kl_beta q.a");
  require_positive(q.b, "kl_beta q.b");
  require_positive(p.a, "kl_beta p.a");
  require_positive(p.b, "kl_beta p.b");
  const double ln_beta_q = ln_gamma(q.a) + ln_gamma(q.b) - ln_gamma(q.a + q.b);
  const double ln_beta_p = ln_gamma(p.a) + ln_gamma(p.b) - ln_gamma(p.a + p.b);
  const double psi_sum = digamma(q.a + q.b);
  const double kl = ln_beta_p - ln_beta_q + (q.a - p.a) * (digamma(q.a) - psi_sum) +
                    (q.b - p.b) * (digamma(q.b) - psi_sum);
  return std::max(kl, 0.0);
}

double gaussian_entropy_diag(const Vector& var) {
  double h = 0.0;
  for (Eigen::Index j = 0; j < var.size(); ++j) {
    require_positive(var[j], "gaussian_entropy_diag");
    h += std::log(var[j]);
  }
  return 0.5 * h + static_cast<double>(var.size()) * (0.5 + kHalfLogTwoPi);
}

double gaussian_log_pdf_diag(const Vector& x, const DiagGaussian& g) {
  require_same_dim(x.size(), g.mean.size(), "gaussian_log_pdf_diag");
  require_same_dim(x.size(), g.var.size(), "gaussian_log_pdf_diag");
  double lp = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double d = x[j] - g.mean[j];
    lp += -0.5 * std::log(g.var[j]) - 0.5 * d * d / g.var[j];
  }
  return lp - static_cast<double>(x.size()) * kHalfLogTwoPi;
}

double expected_log_pi(const StickPosterior& gamma, int t) {
  const int T = gamma.truncation();
  if (t < 0 || t >= T) {
    throw std::out_of_range("expected_log_pi: cluster index " + std::to_string(t) +
                            " outside [0, " + std::to_string(T) + ")");
  }
  double value = 0.0;
  for (int l = 0; l < t; ++l) {
    value += digamma(gamma.gamma2[l]) - digamma(gamma.gamma1[l] + gamma.gamma2[l]);
  }
  if (t < T - 1) {
    value += digamma(gamma.gamma1[t]) - digamma(gamma.gamma1[t] + gamma.gamma2[t]);
  }
  return value;
}

Vector expected_log_pi_all(const StickPosterior& gamma) {
  const int T = gamma.truncation();
  Vector out(T);
  double rest = 0.0;  // sum_{l<t} E[ln(1 - beta_l)]
  for (int t = 0; t < T; ++t) {
    if (t < T - 1) {
      const double psi_sum = digamma(gamma.gamma1[t] + gamma.gamma2[t]);
      out[t] = rest + digamma(gamma.gamma1[t]) - psi_sum;
      rest += digamma(gamma.gamma2[t]) - psi_sum;
    } else {
      out[t] = rest;
    }
  }
  return out;
}

Vector expected_stick_weights(const StickPosterior& gamma) {
  const int T = gamma.truncation();
  Vector out(T);
  double remaining = 1.0;
  for (int t = 0; t < T - 1; ++t) {
    const double total = gamma.gamma1[t] + gamma.gamma2[t];
    out[t] = remaining * gamma.gamma1[t] / total;
    remaining *= gamma.gamma2[t] / total;
  }
  out[T - 1] = remaining;
  return out;
}

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double variance_from_raw(double raw) {
  const double s = softplus(raw);
  return std::max(s * s, kVarianceFloor);
}

double variance_from_raw_grad(double raw) {
  const double s = softplus(raw);
  if (s * s < kVarianceFloor) return 0.0;
  return 2.0 * s * sigmoid(raw);
}

double raw_from_variance(double var) {
  const double s = std::sqrt(std::max(var, kVarianceFloor));
  // softplus^{-1}(s) = ln(e^s - 1) = s + ln(1 - e^{-s})
  return s + std::log(-std::expm1(-s));
}

}  // namespace dpdlgmm
