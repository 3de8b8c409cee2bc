#include "dpdlgmm/svi.hpp"

#include <cmath>
#include <string>

namespace dpdlgmm {

double rho_schedule(long step, double tau, double kappa) {
  if (step < 1) throw std::invalid_argument("rho_schedule: step must be >= 1");
  if (!(tau >= 0.0)) throw std::invalid_argument("rho_schedule: tau must be >= 0");
  if (!(kappa > 0.5 && kappa <= 1.0))
    throw std::invalid_argument("rho_schedule: kappa must lie in (0.5, 1], got " +
                                std::to_string(kappa));
  return std::pow(static_cast<double>(step) + tau, -kappa);
}

void svi_step(const Matrix& x, std::span<const int> batch, VariationalState& state,
              GenerativeParams& theta, double rho) {
  if (batch.empty()) throw std::invalid_argument("svi_step: empty batch");
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("svi_step: rho must lie in [0, 1]");
  const int T = theta.truncation();
  if (state.gamma.truncation() != T || state.resp.truncation() != T)
    throw std::invalid_argument("svi_step: truncation mismatch");
  if (T < 2) throw std::invalid_argument("svi_step: truncation must be >= 2");
  const double scale = static_cast<double>(x.rows()) / static_cast<double>(batch.size());

  // Current soft counts implied by gamma; the last cluster's count is
  // carried by gamma2 of the second-to-last stick.
  Vector old_mass(T);
  for (int t = 0; t < T - 1; ++t) old_mass[t] = state.gamma.gamma1[t] - 1.0;
  old_mass[T - 1] = state.gamma.gamma2[T - 2] - state.eta;

  const TopPriorEstimate est = estimate_top_prior(state.resp.phi, state.nets, x, batch);
  const StickPosterior target = gamma_from_mass(est.mass, state.eta, scale);

  state.gamma.gamma1 = (1.0 - rho) * state.gamma.gamma1 + rho * target.gamma1;
  state.gamma.gamma2 = (1.0 - rho) * state.gamma.gamma2 + rho * target.gamma2;

  for (int t = 0; t < T; ++t) {
    if (!est.defined[t]) continue;
    const double incoming = rho * scale * est.mass[t];
    const double blended = (1.0 - rho) * old_mass[t] + incoming;
    if (!(blended >= kEmptyClusterMass)) continue;
    const double w = incoming / blended;
    auto& c = theta.clusters[t];
    const Vector m_old = c.top_mean;
    c.top_mean = (1.0 - w) * m_old + w * est.mean[t];
    const Vector from_old = c.top_var + (m_old - c.top_mean).cwiseAbs2();
    const Vector from_batch = est.var[t] + (est.mean[t] - c.top_mean).cwiseAbs2();
    c.top_var = ((1.0 - w) * from_old + w * from_batch).cwiseMax(kVarianceFloor);
  }
}

}  // namespace dpdlgmm
