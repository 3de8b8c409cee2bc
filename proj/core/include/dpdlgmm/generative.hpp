#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dpdlgmm/nets.hpp"
#include "dpdlgmm/special_math.hpp"
#include "dpdlgmm/types.hpp"

namespace dpdlgmm {

enum class EmissionKind { Bernoulli, Gaussian };

const char* to_string(EmissionKind kind);
EmissionKind parse_emission_kind(const std::string& name);

/// Hidden representations h^(1..L) of one sample; entry k holds layer k+1,
/// so front() is h^(1) (next to the data) and back() is h^(L) (top).
using LatentStack = std::vector<Vector>;

/// Architecture shared by the generative model and the recognition networks.
struct ModelSpec {
  EmissionKind emission = EmissionKind::Gaussian;
  int data_dim = 0;
  std::vector<int> latent_dims;  // p_1 .. p_L
  std::vector<int> hidden{64};   // hidden widths of every network

  int num_layers() const { return static_cast<int>(latent_dims.size()); }
  void validate() const;
};

struct EmissionGrad {
  std::variant<nn::MlpGrad, nn::GaussianHeadGrad> net;
};

/// Observation model p_X(x | f_{W^(0)}(h^(1))). Bernoulli emissions hold a
/// network producing logits; Gaussian emissions hold a GaussianHead.
class Emission {
 public:
  Emission() = default;
  explicit Emission(nn::Mlp logits) : net_(std::move(logits)) {}
  explicit Emission(nn::GaussianHead head) : net_(std::move(head)) {}

  static Emission make(EmissionKind kind, int latent_dim, std::span<const int> hidden,
                       int data_dim, Rng& rng);

  EmissionKind kind() const;
  int in_dim() const;
  int out_dim() const;

  double log_prob(const Vector& h1, const Vector& x) const;

  /// Returns log_prob; adds weight * d/d(params) into `grad` and writes
  /// d(log_prob)/d(h1) into `grad_h1`.
  double log_prob_backward(const Vector& h1, const Vector& x, double weight,
                           EmissionGrad& grad, Vector& grad_h1) const;

  /// Mean of p_X(. | h1): probabilities for Bernoulli, the Gaussian mean otherwise.
  Vector mean(const Vector& h1) const;
  Vector sample(const Vector& h1, Rng& rng) const;

  EmissionGrad zero_grad() const;

  std::variant<nn::Mlp, nn::GaussianHead>& net() { return net_; }
  const std::variant<nn::Mlp, nn::GaussianHead>& net() const { return net_; }

 private:
  std::variant<nn::Mlp, nn::GaussianHead> net_;
};

/// Parameters of one mixture component.
struct ClusterGenerative {
  Vector top_mean;                 // m^(L)
  Vector top_var;                  // V^(L) = diag(s^(L)^2)
  std::vector<nn::Mlp> layer_maps; // layer_maps[k]: h^(k+2) -> h^(k+1)
  std::vector<Vector> noise_raw;   // noise_raw[k]: raw scale of layer k+1
  Emission emission;

  /// Per-coordinate noise variance s^(k+1)^2 after the softplus map.
  Vector noise_var(int k) const;
};

struct ClusterGenerativeGrad {
  std::vector<nn::MlpGrad> layer_maps;
  std::vector<Vector> noise_raw;
  EmissionGrad emission;

  static ClusterGenerativeGrad zeros_like(const ClusterGenerative& c);
};

/// Truncated generative parameters Theta for T clusters.
struct GenerativeParams {
  ModelSpec spec;
  std::vector<ClusterGenerative> clusters;

  int truncation() const { return static_cast<int>(clusters.size()); }
  int num_layers() const { return spec.num_layers(); }
  void validate() const;
};

/// Glorot-initialized parameters; m = 0, V = 1, layer noise scale 1.
GenerativeParams make_generative(const ModelSpec& spec, int truncation, Rng& rng);

// Trainable generative parameters (Lambda) of a cluster: layer maps, the
// lower-layer noise scales and the emission network. m and V are excluded;
// they are set in closed form.
std::vector<std::span<double>> param_blocks(ClusterGenerative& c);
std::vector<std::span<double>> param_blocks(ClusterGenerativeGrad& g);

struct StickWeights {
  Vector pi;
};

/// pi_k = beta_k prod_{l<k} (1 - beta_l). Requires beta in [0,1] with last entry 1.
StickWeights stick_breaking(const Vector& beta);

/// T-1 draws from Beta(1, eta) followed by a final 1.
Vector sample_prior_sticks(double eta, int truncation, Rng& rng);

/// Maps standard-normal noise to the latent stack of cluster t:
/// h^(L) = m + sqrt(V) eps^(L), h^(l) = f_l(h^(l+1)) + s^(l) eps^(l).
LatentStack propagate_noise(const GenerativeParams& theta, int t, const LatentStack& eps);

struct GenerativeSample {
  Matrix x;                      // n x p_0
  std::vector<int> z;            // 0-based cluster of each row
  std::vector<LatentStack> h;
};

/// Ancestral sample of one point from cluster t.
Vector sample_from_cluster(const GenerativeParams& theta, int t, Rng& rng,
                           LatentStack* latents = nullptr);

/// n ancestral samples with z ~ Cat(pi).
GenerativeSample sample_generative(const GenerativeParams& theta, const StickWeights& pi,
                                   int n, Rng& rng);

/// ln N(h^(L); m_t, V_t).
double top_log_prob(const GenerativeParams& theta, int t, const Vector& top);

/// E_{h ~ q}[ln N(h; m_t, V_t)] in closed form for a diagonal Gaussian q.
double expected_top_log_prob(const GenerativeParams& theta, int t, const DiagGaussian& q);

/// sum_{l<L} ln N(h^(l); f_l(h^(l+1)), s_l^2) + ln p_X(x | f_0(h^(1))).
double conditional_log_prob(const GenerativeParams& theta, int t, const Vector& x,
                            const LatentStack& h);

/// Returns conditional_log_prob; adds weight * parameter gradients into
/// `grad` and writes the unweighted d/dh per layer into `grad_h`.
double conditional_log_prob_backward(const GenerativeParams& theta, int t, const Vector& x,
                                     const LatentStack& h, double weight,
                                     ClusterGenerativeGrad& grad, LatentStack& grad_h);

/// ln p(x, h^(1:L) | z = t) = top_log_prob + conditional_log_prob.
double joint_log_prob(const GenerativeParams& theta, int t, const Vector& x,
                      const LatentStack& h);

}  // namespace dpdlgmm
