#include "dpdlgmm/nets.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dpdlgmm::nn {

namespace {

void check_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw std::invalid_argument(std::string(what) + ": expected dimension " +
                                std::to_string(want) + ", found " + std::to_string(got));
  }
}

Vector apply_layer(const DenseLayer& layer, const Vector& x) {
  Vector y = layer.weights * x + layer.bias;
  if (layer.activation == Activation::Tanh) y = y.array().tanh();
  return y;
}

// Backprop through one layer given its input and post-activation output.
Vector layer_backward(const DenseLayer& layer, const Vector& input, const Vector& output,
                      const Vector& grad_out, DenseGrad& grad, double scale) {
  Vector pre_grad = grad_out;
  if (layer.activation == Activation::Tanh) {
    pre_grad.array() *= 1.0 - output.array().square();
  }
  grad.weights.noalias() += (scale * pre_grad) * input.transpose();
  grad.bias += scale * pre_grad;
  return layer.weights.transpose() * pre_grad;
}

void append(std::vector<std::span<double>>& out, std::vector<std::span<double>> more) {
  out.insert(out.end(), more.begin(), more.end());
}

}  // namespace

DenseLayer DenseLayer::make(int in, int out, Activation act, Rng& rng) {
  if (in < 1 || out < 0) throw std::invalid_argument("DenseLayer::make: bad dimensions");
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> uniform(-limit, limit);
  DenseLayer layer;
  layer.weights.resize(out, in);
  // Column-major fill order; fixed so that seeds reproduce across builds.
  for (Eigen::Index j = 0; j < layer.weights.cols(); ++j)
    for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) layer.weights(i, j) = uniform(rng);
  layer.bias = Vector::Zero(out);
  layer.activation = act;
  return layer;
}

DenseGrad DenseGrad::zeros_like(const DenseLayer& layer) {
  return {Matrix::Zero(layer.weights.rows(), layer.weights.cols()),
          Vector::Zero(layer.bias.size())};
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw std::invalid_argument("Mlp: use Mlp(dim) for an identity map");
  for (size_t k = 0; k < layers_.size(); ++k) {
    check_dim(layers_[k].bias.size(), layers_[k].out_dim(), "Mlp layer bias");
    if (k > 0) check_dim(layers_[k].in_dim(), layers_[k - 1].out_dim(), "Mlp layer chain");
  }
  in_dim_ = layers_.front().in_dim();
  out_dim_ = layers_.back().out_dim();
}

Mlp Mlp::make(int in, std::span<const int> hidden, int out, Activation out_act, Rng& rng) {
  std::vector<DenseLayer> layers;
  int prev = in;
  for (int width : hidden) {
    layers.push_back(DenseLayer::make(prev, width, Activation::Tanh, rng));
    prev = width;
  }
  layers.push_back(DenseLayer::make(prev, out, out_act, rng));
  return Mlp(std::move(layers));
}

MlpGrad MlpGrad::zeros_like(const Mlp& net) {
  MlpGrad g;
  g.layers.reserve(net.layers().size());
  for (const auto& layer : net.layers()) g.layers.push_back(DenseGrad::zeros_like(layer));
  return g;
}

Vector forward(const Mlp& net, const Vector& x, MlpCache* cache) {
  check_dim(x.size(), net.in_dim(), "forward");
  if (cache != nullptr) {
    cache->inputs.clear();
    cache->outputs.clear();
  }
  Vector h = x;
  for (const auto& layer : net.layers()) {
    Vector y = apply_layer(layer, h);
    if (cache != nullptr) {
      cache->inputs.push_back(std::move(h));
      cache->outputs.push_back(y);
    }
    h = std::move(y);
  }
  return h;
}

Vector backward(const Mlp& net, const MlpCache& cache, const Vector& grad_out,
                MlpGrad& grads, double scale) {
  const auto& layers = net.layers();
  if (cache.inputs.size() != layers.size() || cache.outputs.size() != layers.size() ||
      grads.layers.size() != layers.size()) {
    throw std::invalid_argument("backward: cache or gradient does not match network");
  }
  check_dim(grad_out.size(), net.out_dim(), "backward grad_out");
  Vector g = grad_out;
  for (size_t k = layers.size(); k-- > 0;) {
    if (cache.inputs[k].size() != layers[k].in_dim() ||
        cache.outputs[k].size() != layers[k].out_dim()) {
      throw std::invalid_argument("backward: stale cache for layer " + std::to_string(k));
    }
    g = layer_backward(layers[k], cache.inputs[k], cache.outputs[k], g, grads.layers[k], scale);
  }
  return g;
}

GaussianHead GaussianHead::make(int in, std::span<const int> hidden, int out, Rng& rng) {
  GaussianHead head;
  int features = in;
  if (hidden.empty()) {
    head.trunk = Mlp(in);
  } else {
    std::vector<DenseLayer> layers;
    int prev = in;
    for (int width : hidden) {
      layers.push_back(DenseLayer::make(prev, width, Activation::Tanh, rng));
      prev = width;
    }
    head.trunk = Mlp(std::move(layers));
    features = prev;
  }
  head.mean_out = DenseLayer::make(features, out, Activation::Identity, rng);
  head.raw_var_out = DenseLayer::make(features, out, Activation::Identity, rng);
  return head;
}

GaussianHeadGrad GaussianHeadGrad::zeros_like(const GaussianHead& head) {
  return {MlpGrad::zeros_like(head.trunk), DenseGrad::zeros_like(head.mean_out),
          DenseGrad::zeros_like(head.raw_var_out)};
}

DiagGaussian head_forward(const GaussianHead& head, const Vector& x, HeadCache* cache) {
  Vector features = forward(head.trunk, x, cache ? &cache->trunk : nullptr);
  DiagGaussian out;
  out.mean = apply_layer(head.mean_out, features);
  Vector raw = apply_layer(head.raw_var_out, features);
  out.var.resize(raw.size());
  for (Eigen::Index j = 0; j < raw.size(); ++j) out.var[j] = variance_from_raw(raw[j]);
  if (cache != nullptr) {
    cache->features = std::move(features);
    cache->raw = std::move(raw);
  }
  return out;
}

Vector head_backward(const GaussianHead& head, const HeadCache& cache,
                     const Vector& grad_mean, const Vector& grad_var,
                     GaussianHeadGrad& grads, double scale) {
  check_dim(grad_mean.size(), head.out_dim(), "head_backward grad_mean");
  check_dim(grad_var.size(), head.out_dim(), "head_backward grad_var");
  check_dim(cache.raw.size(), head.out_dim(), "head_backward cache");
  check_dim(cache.features.size(), head.mean_out.in_dim(), "head_backward cache");

  Vector grad_raw(grad_var.size());
  for (Eigen::Index j = 0; j < grad_var.size(); ++j) {
    grad_raw[j] = grad_var[j] * variance_from_raw_grad(cache.raw[j]);
  }
  // Both output layers are Identity, so their outputs are not needed.
  Vector grad_features = layer_backward(head.mean_out, cache.features, Vector(), grad_mean,
                                        grads.mean_out, scale);
  grad_features += layer_backward(head.raw_var_out, cache.features, Vector(), grad_raw,
                                  grads.raw_var_out, scale);
  if (head.trunk.layers().empty()) return grad_features;
  return backward(head.trunk, cache.trunk, grad_features, grads.trunk, scale);
}

std::vector<std::span<double>> param_blocks(DenseLayer& layer) {
  return {as_span(layer.weights), as_span(layer.bias)};
}

std::vector<std::span<double>> param_blocks(DenseGrad& grad) {
  return {as_span(grad.weights), as_span(grad.bias)};
}

std::vector<std::span<double>> param_blocks(Mlp& net) {
  std::vector<std::span<double>> out;
  for (auto& layer : net.layers()) append(out, param_blocks(layer));
  return out;
}

std::vector<std::span<double>> param_blocks(MlpGrad& grad) {
  std::vector<std::span<double>> out;
  for (auto& layer : grad.layers) append(out, param_blocks(layer));
  return out;
}

std::vector<std::span<double>> param_blocks(GaussianHead& head) {
  auto out = param_blocks(head.trunk);
  append(out, param_blocks(head.mean_out));
  append(out, param_blocks(head.raw_var_out));
  return out;
}

std::vector<std::span<double>> param_blocks(GaussianHeadGrad& grad) {
  auto out = param_blocks(grad.trunk);
  append(out, param_blocks(grad.mean_out));
  append(out, param_blocks(grad.raw_var_out));
  return out;
}

void add_scaled(std::span<const std::span<double>> dst,
                std::span<const std::span<double>> src, double weight) {
  if (dst.size() != src.size()) {
    throw std::invalid_argument("parameter/gradient block count mismatch");
  }
  for (size_t k = 0; k < dst.size(); ++k) {
    if (dst[k].size() != src[k].size()) {
      throw std::invalid_argument("shape mismatch in parameter block " + std::to_string(k));
    }
  }
  if (weight == 0.0) return;
  for (size_t k = 0; k < dst.size(); ++k) {
    for (size_t i = 0; i < dst[k].size(); ++i) dst[k][i] += weight * src[k][i];
  }
}

void sgd_step(std::span<const std::span<double>> params,
              std::span<const std::span<double>> grads, double alpha) {
  add_scaled(params, grads, alpha);
}

}  // namespace dpdlgmm::nn
