#pragma once

#include <span>
#include <vector>

#include "dpdlgmm/generative.hpp"
#include "dpdlgmm/variational.hpp"

namespace dpdlgmm {

/// Responsibilities below this weight are skipped in gradient sums.
inline constexpr double kPhiGradientThreshold = 1e-8;

/// Gradient with respect to every trainable network parameter: the
/// generative Lambda of each cluster and the recognition heads psi.
struct ModelGrad {
  std::vector<ClusterGenerativeGrad> generative;
  std::vector<std::vector<nn::GaussianHeadGrad>> heads;

  static ModelGrad zeros_like(const GenerativeParams& theta, const InferenceNets& nets);
};

/// Standard-normal noise for the reparameterized samples of a batch, indexed
/// by (batch position i, cluster t, sample s). Noise is drawn for every
/// cluster so the stream layout does not depend on phi.
class FrozenNoise {
 public:
  static FrozenNoise draw(int batch, int truncation, int samples,
                          std::span<const int> latent_dims, Rng& rng);

  const LatentStack& at(int i, int t, int s) const {
    return eps_[(static_cast<size_t>(i) * truncation_ + t) * samples_ + s];
  }
  int samples() const { return samples_; }

 private:
  int truncation_ = 0;
  int samples_ = 0;
  std::vector<LatentStack> eps_;
};

/// Frozen-noise Monte-Carlo estimate of the network-dependent part of the
/// bound, averaged over the batch rows:
///   (1/B) sum_i sum_t phi_{i,t} [ sum_l H[q_l] + E_q ln N(h^(L); m, V)
///                                 + (1/S) sum_s ln p(x, h_s^(1:L-1) | h_s^(L), t) ].
double network_objective(const Matrix& x, std::span<const int> rows, const Matrix& phi,
                         const InferenceNets& nets, const GenerativeParams& theta,
                         const FrozenNoise& noise);

/// Same value as network_objective; also writes its gradient into `grad`
/// (overwritten, not accumulated).
double network_gradient(const Matrix& x, std::span<const int> rows, const Matrix& phi,
                        const InferenceNets& nets, const GenerativeParams& theta,
                        const FrozenNoise& noise, ModelGrad& grad);

/// params += alpha * grad over Lambda and psi.
void apply_gradient(GenerativeParams& theta, InferenceNets& nets, ModelGrad& grad,
                    double alpha);

/// One ascent step on the batch objective with freshly drawn noise.
/// Returns the objective value before the step.
double grad_step(const Matrix& x, std::span<const int> rows, const Matrix& phi,
                 InferenceNets& nets, GenerativeParams& theta, double alpha, int samples,
                 Rng& rng);

// Flat parameter lists in the order shared with ModelGrad.
std::vector<std::span<double>> param_blocks(GenerativeParams& theta, InferenceNets& nets);
std::vector<std::span<double>> param_blocks(ModelGrad& grad);

}  // namespace dpdlgmm
