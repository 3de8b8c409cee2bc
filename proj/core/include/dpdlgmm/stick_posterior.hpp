#pragma once

#include "dpdlgmm/types.hpp"

namespace dpdlgmm {

/// Truncated beta posterior over stick proportions. Holds the parameters of
/// q(beta_t) = Beta(gamma1[t], gamma2[t]) for t = 0..T-2; the last stick is
/// fixed at beta_{T-1} = 1 so only T-1 pairs are stored.
struct StickPosterior {
  Vector gamma1;
  Vector gamma2;

  StickPosterior() = default;
  StickPosterior(Vector g1, Vector g2);

  /// Prior-shaped posterior (1, eta) for a truncation level T.
  static StickPosterior prior(int truncation, double eta);

  int truncation() const { return static_cast<int>(gamma1.size()) + 1; }

  /// Throws std::invalid_argument when shapes differ or any entry is <= 0.
  void validate() const;
};

}  // namespace dpdlgmm
