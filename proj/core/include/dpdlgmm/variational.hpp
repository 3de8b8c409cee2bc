#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "dpdlgmm/generative.hpp"
#include "dpdlgmm/nets.hpp"
#include "dpdlgmm/special_math.hpp"
#include "dpdlgmm/stick_posterior.hpp"
#include "dpdlgmm/types.hpp"

namespace dpdlgmm {

/// Raised when an ELBO or responsibility computation produces a non-finite value.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Categorical posterior q(z_n) = Cat(phi_n) over the T clusters.
///
/// Rows listed in `clamp` carry an observed label: they are one-hot and the
/// responsibility update leaves them alone.
struct Responsibilities {
  Matrix phi;              // N x T, row-stochastic
  std::vector<int> clamp;  // per row: fixed cluster, or kUnclamped

  static constexpr int kUnclamped = -1;

  static Responsibilities uniform(int n, int truncation);

  int rows() const { return static_cast<int>(phi.rows()); }
  int truncation() const { return static_cast<int>(phi.cols()); }
  bool is_clamped(int n) const { return clamp[static_cast<size_t>(n)] != kUnclamped; }

  /// Fixes row n to cluster t (one-hot).
  void clamp_row(int n, int t);

  /// Checks row sums (within tol), non-negativity and one-hot clamped rows.
  void validate(double tol = 1e-9) const;
};

/// Recognition networks psi: heads[t][k] maps x to q(h^(k+1) | x, z = t).
struct InferenceNets {
  std::vector<std::vector<nn::GaussianHead>> heads;

  int truncation() const { return static_cast<int>(heads.size()); }
  int num_layers() const { return heads.empty() ? 0 : static_cast<int>(heads.front().size()); }

  /// q(h^(1..L) | x, z = t), one Gaussian per layer.
  std::vector<DiagGaussian> recognize(int t, const Vector& x) const;
};

InferenceNets make_inference_nets(const ModelSpec& spec, int truncation, Rng& rng);

/// Everything the variational posterior is made of, plus the DP
/// concentration whose Beta(1, eta) prior enters the bound.
struct VariationalState {
  StickPosterior gamma;
  Responsibilities resp;
  InferenceNets nets;
  double eta = 1.0;
};

/// Soft cluster sizes N_t = sum_{n in rows} phi_{n,t}, accumulated in row order.
/// An empty `rows` span means all rows.
Vector cluster_mass(const Matrix& phi, std::span<const int> rows = {});

/// Closed-form stick posterior given cluster masses:
/// gamma1_t = 1 + scale * N_t, gamma2_t = eta + scale * sum_{r>t} N_r.
StickPosterior gamma_from_mass(const Vector& mass, double eta, double scale = 1.0);

/// Coordinate update of the stick posterior from the responsibilities.
StickPosterior update_gamma(const Matrix& phi, double eta);

/// Draws one standard-normal latent stack for the given layer sizes.
LatentStack draw_standard_stack(std::span<const int> latent_dims, Rng& rng);

/// Monte-Carlo estimate of E_q[ln p(x, h^(1:L) | z = t)] with h drawn from the
/// cluster-t recognition networks by reparameterization. The top-layer prior
/// term is taken in closed form; the remaining factors use S samples.
double mc_expected_log_joint(const Vector& x, int t, const InferenceNets& nets,
                             const GenerativeParams& theta, int samples, Rng& rng);

/// Unnormalized log-responsibilities of one sample:
/// E[ln pi_t] + E_q[ln p(x, h | z = t)] + sum_l H[q(h^(l) | x, z = t)].
/// The S standard-normal draws are shared by all clusters.
Vector responsibility_scores(const Vector& x, const Vector& expected_log_pi,
                             const InferenceNets& nets, const GenerativeParams& theta,
                             int samples, Rng& rng);

/// Fixed-point update of every unclamped row (or only `rows`, if non-empty).
/// Throws NumericalError if a row cannot be normalized.
void update_phi(const Matrix& x, const StickPosterior& gamma, const InferenceNets& nets,
                const GenerativeParams& theta, int samples, Rng& rng,
                Responsibilities& resp, std::span<const int> rows = {});

/// Weighted moments of the top-layer recognition Gaussians over `rows`.
struct TopPriorEstimate {
  std::vector<Vector> mean;
  std::vector<Vector> var;
  Vector mass;                // N_t over the rows
  std::vector<bool> defined;  // false where mass < kEmptyClusterMass
};

inline constexpr double kEmptyClusterMass = 1e-8;

TopPriorEstimate estimate_top_prior(const Matrix& phi, const InferenceNets& nets,
                                    const Matrix& x, std::span<const int> rows = {});

/// Closed-form m^(L), V^(L) update. Clusters whose mass is below
/// kEmptyClusterMass keep their previous values; their indices are returned.
std::vector<int> update_top_prior(const Matrix& phi, const InferenceNets& nets,
                                  const Matrix& x, GenerativeParams& theta);

/// -sum_{n,t} phi_{n,t} KL(q(h^(L) | x_n, t) || N(m_t, V_t)): the part of
/// the bound that depends on the top-layer prior.
double top_prior_objective(const Matrix& phi, const InferenceNets& nets, const Matrix& x,
                           const GenerativeParams& theta);

/// Monte-Carlo evidence lower bound. Noise is drawn for every (n, t) pair in
/// a fixed order whatever phi is, so two evaluations from equal RNG states
/// share their noise.
double elbo(const Matrix& x, const VariationalState& state, const GenerativeParams& theta,
            int samples, Rng& rng);

/// Predictive cluster distribution of a new sample:
/// p(z = k | x) proportional to E_q[pi_k] * E_{h ~ q_psi_k}[p_X(x | h^(1))],
/// with the expectation over h^(1) drawn from the cluster-k recognition
/// network. The S draws are shared by all clusters.
Vector predict_cluster(const Vector& x, const VariationalState& state,
                       const GenerativeParams& theta, int samples, Rng& rng);

}  // namespace dpdlgmm
