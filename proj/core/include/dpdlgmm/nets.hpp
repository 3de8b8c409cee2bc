#pragma once

#include <span>
#include <vector>

#include "dpdlgmm/special_math.hpp"
#include "dpdlgmm/types.hpp"

namespace dpdlgmm::nn {

enum class Activation { Tanh, Identity };

/// y = act(W x + b)
struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;     // out
  Activation activation = Activation::Identity;

  int in_dim() const { return static_cast<int>(weights.cols()); }
  int out_dim() const { return static_cast<int>(weights.rows()); }

  /// Glorot-uniform weights, zero bias.
  static DenseLayer make(int in, int out, Activation act, Rng& rng);
};

/// Gradient of a DenseLayer, same shapes.
struct DenseGrad {
  Matrix weights;
  Vector bias;

  static DenseGrad zeros_like(const DenseLayer& layer);
};

/// Feed-forward stack. An empty stack is the identity map on `in_dim`.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(int dim) : in_dim_(dim), out_dim_(dim) {}
  explicit Mlp(std::vector<DenseLayer> layers);

  /// Tanh hidden layers of the given widths followed by an output layer
  /// with `out_act`. An empty `hidden` gives a single layer.
  static Mlp make(int in, std::span<const int> hidden, int out, Activation out_act,
                  Rng& rng);

  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

 private:
  std::vector<DenseLayer> layers_;
  int in_dim_ = 0;
  int out_dim_ = 0;
};

struct MlpGrad {
  std::vector<DenseGrad> layers;

  static MlpGrad zeros_like(const Mlp& net);
};

/// Activation record of one forward pass; inputs[k] feeds layer k and
/// outputs[k] is its post-activation value.
struct MlpCache {
  std::vector<Vector> inputs;
  std::vector<Vector> outputs;
};

/// Runs the network. When `cache` is non-null it receives what backward needs.
Vector forward(const Mlp& net, const Vector& x, MlpCache* cache = nullptr);

/// Reverse-mode pass. Adds scale * d(loss)/d(params) into `grads` and
/// returns the unscaled d(loss)/d(x). Throws std::invalid_argument if the
/// cache does not match the network.
Vector backward(const Mlp& net, const MlpCache& cache, const Vector& grad_out,
                MlpGrad& grads, double scale = 1.0);

/// Network emitting a diagonal Gaussian: mean = mean_out(trunk(x)),
/// var = max(softplus(raw_var_out(trunk(x)))^2, kVarianceFloor).
struct GaussianHead {
  Mlp trunk;
  DenseLayer mean_out;
  DenseLayer raw_var_out;

  int in_dim() const { return trunk.in_dim(); }
  int out_dim() const { return mean_out.out_dim(); }

  static GaussianHead make(int in, std::span<const int> hidden, int out, Rng& rng);
};

struct GaussianHeadGrad {
  MlpGrad trunk;
  DenseGrad mean_out;
  DenseGrad raw_var_out;

  static GaussianHeadGrad zeros_like(const GaussianHead& head);
};

struct HeadCache {
  MlpCache trunk;
  Vector features;
  Vector raw;
};

DiagGaussian head_forward(const GaussianHead& head, const Vector& x,
                          HeadCache* cache = nullptr);

/// Backpropagates d(loss)/d(mean) and d(loss)/d(var) through the head;
/// `scale` applies to the parameter gradients only.
Vector head_backward(const GaussianHead& head, const HeadCache& cache,
                     const Vector& grad_mean, const Vector& grad_var,
                     GaussianHeadGrad& grads, double scale = 1.0);

// Flat views of every parameter array, in a fixed order shared by a network
// and its gradient type. Used by sgd_step, serialization and gradient checks.
std::vector<std::span<double>> param_blocks(DenseLayer& layer);
std::vector<std::span<double>> param_blocks(DenseGrad& grad);
std::vector<std::span<double>> param_blocks(Mlp& net);
std::vector<std::span<double>> param_blocks(MlpGrad& grad);
std::vector<std::span<double>> param_blocks(GaussianHead& head);
std::vector<std::span<double>> param_blocks(GaussianHeadGrad& grad);

/// Flattened view of an Eigen array.
template <class Derived>
std::span<double> as_span(Eigen::PlainObjectBase<Derived>& a) {
  return {a.data(), static_cast<size_t>(a.size())};
}

/// dst += weight * src over congruent block lists.
/// Throws std::invalid_argument on a shape mismatch.
void add_scaled(std::span<const std::span<double>> dst,
                std::span<const std::span<double>> src, double weight);

/// params += alpha * grads (gradient ascent).
void sgd_step(std::span<const std::span<double>> params,
              std::span<const std::span<double>> grads, double alpha);

template <class P, class G>
  requires requires(P& p, G& g) {
    param_blocks(p);
    param_blocks(g);
  }
void sgd_step(P& params, G& grads, double alpha) {
  const auto p = param_blocks(params);
  const auto g = param_blocks(grads);
  sgd_step(std::span<const std::span<double>>(p), std::span<const std::span<double>>(g),
           alpha);
}

}  // namespace dpdlgmm::nn
