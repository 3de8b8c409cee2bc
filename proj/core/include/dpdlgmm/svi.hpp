#pragma once

#include <span>

#include "dpdlgmm/generative.hpp"
#include "dpdlgmm/variational.hpp"

namespace dpdlgmm {

/// Robbins-Monro step size rho = (step + tau)^(-kappa).
/// Requires step >= 1, tau >= 0 and kappa in (0.5, 1].
double rho_schedule(long step, double tau, double kappa);

/// Stochastic update of (gamma, m^(L), V^(L)) from a minibatch.
///
/// Batch statistics are computed from the current responsibilities of the
/// batch rows and rescaled by N/B. gamma is blended directly,
/// gamma <- (1 - rho) gamma + rho gamma_hat; the top-layer moments are
/// blended through their weighted sufficient statistics so that the
/// iteration shares its fixed point with the full-batch updates. With
/// B = N and rho = 1 the result is identical to update_gamma followed by
/// update_top_prior.
void svi_step(const Matrix& x, std::span<const int> batch, VariationalState& state,
              GenerativeParams& theta, double rho);

}  // namespace dpdlgmm
