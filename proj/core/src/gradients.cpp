#include "dpdlgmm/gradients.hpp"

#include <cmath>
#include <string>

namespace dpdlgmm {

namespace {

void check_rows(const Matrix& x, std::span<const int> rows, const Matrix& phi) {
  if (rows.empty()) throw std::invalid_argument("empty batch");
  for (int n : rows) {
    if (n < 0 || n >= x.rows())
      throw std::out_of_range("batch row " + std::to_string(n) + " out of range");
  }
  if (phi.rows() != x.rows()) throw std::invalid_argument("phi/data row count mismatch");
}

// Per-(sample, cluster) contribution; accumulates into grad when non-null.
double cluster_term(const Vector& x, int t, int i, double weight, const InferenceNets& nets,
                    const GenerativeParams& theta, const FrozenNoise& noise, ModelGrad* grad) {
  const int L = theta.num_layers();
  const int S = noise.samples();
  const auto& heads = nets.heads[static_cast<size_t>(t)];

  std::vector<nn::HeadCache> caches(static_cast<size_t>(L));
  std::vector<DiagGaussian> q(static_cast<size_t>(L));
  for (int k = 0; k < L; ++k) {
    q[k] = nn::head_forward(heads[k], x, grad ? &caches[k] : nullptr);
  }

  double value = 0.0;
  for (const auto& g : q) value += gaussian_entropy_diag(g.var);
  value += expected_top_log_prob(theta, t, q.back());

  std::vector<Vector> d_mean(static_cast<size_t>(L)), d_var(static_cast<size_t>(L));
  if (grad) {
    for (int k = 0; k < L; ++k) d_var[k] = 0.5 * q[k].var.cwiseInverse();
    const auto& c = theta.clusters[t];
    d_mean[L - 1] = ((c.top_mean - q[L - 1].mean).array() / c.top_var.array()).matrix();
    d_var[L - 1] -= 0.5 * c.top_var.cwiseInverse();
    for (int k = 0; k < L - 1; ++k) d_mean[k] = Vector::Zero(q[k].mean.size());
  }

  LatentStack h(static_cast<size_t>(L));
  LatentStack grad_h;
  double sampled = 0.0;
  for (int s = 0; s < S; ++s) {
    const LatentStack& eps = noise.at(i, t, s);
    for (int k = 0; k < L; ++k) {
      h[k] = q[k].mean + (q[k].var.array().sqrt() * eps[k].array()).matrix();
    }
    if (!grad) {
      sampled += conditional_log_prob(theta, t, x, h);
      continue;
    }
    sampled += conditional_log_prob_backward(theta, t, x, h, weight / S,
                                             grad->generative[t], grad_h);
    for (int k = 0; k < L; ++k) {
      d_mean[k] += grad_h[k] / S;
      // h = mu + sqrt(var) * eps  =>  dh/dvar = eps / (2 sqrt(var))
      d_var[k] += (grad_h[k].array() * eps[k].array() / (2.0 * q[k].var.array().sqrt()))
                      .matrix() / S;
    }
  }
  value += sampled / S;

  if (grad) {
    for (int k = 0; k < L; ++k) {
      nn::head_backward(heads[k], caches[k], d_mean[k], d_var[k], grad->heads[t][k], weight);
    }
  }
  return value;
}

double objective_impl(const Matrix& x, std::span<const int> rows, const Matrix& phi,
                      const InferenceNets& nets, const GenerativeParams& theta,
                      const FrozenNoise& noise, ModelGrad* grad) {
  check_rows(x, rows, phi);
  const double inv_batch = 1.0 / static_cast<double>(rows.size());
  double total = 0.0;
  for (size_t i = 0; i < rows.size(); ++i) {
    const int n = rows[i];
    const Vector xn = x.row(n).transpose();
    for (int t = 0; t < theta.truncation(); ++t) {
      const double w = phi(n, t);
      if (w < kPhiGradientThreshold) continue;
      total += w * cluster_term(xn, t, static_cast<int>(i), w * inv_batch, nets, theta, noise,
                                grad);
    }
  }
  return total * inv_batch;
}

}  // namespace

ModelGrad ModelGrad::zeros_like(const GenerativeParams& theta, const InferenceNets& nets) {
  ModelGrad g;
  for (const auto& c : theta.clusters) g.generative.push_back(ClusterGenerativeGrad::zeros_like(c));
  g.heads.resize(nets.heads.size());
  for (size_t t = 0; t < nets.heads.size(); ++t) {
    for (const auto& head : nets.heads[t]) {
      g.heads[t].push_back(nn::GaussianHeadGrad::zeros_like(head));
    }
  }
  return g;
}

FrozenNoise FrozenNoise::draw(int batch, int truncation, int samples,
                              std::span<const int> latent_dims, Rng& rng) {
  if (samples < 1) throw std::invalid_argument("FrozenNoise: samples must be >= 1");
  FrozenNoise noise;
  noise.truncation_ = truncation;
  noise.samples_ = samples;
  noise.eps_.reserve(static_cast<size_t>(batch) * truncation * samples);
  for (int i = 0; i < batch; ++i)
    for (int t = 0; t < truncation; ++t)
      for (int s = 0; s < samples; ++s) noise.eps_.push_back(draw_standard_stack(latent_dims, rng));
  return noise;
}

double network_objective(const Matrix& x, std::span<const int> rows, const Matrix& phi,
                         const InferenceNets& nets, const GenerativeParams& theta,
                         const FrozenNoise& noise) {
  return objective_impl(x, rows, phi, nets, theta, noise, nullptr);
}

double network_gradient(const Matrix& x, std::span<const int> rows, const Matrix& phi,
                        const InferenceNets& nets, const GenerativeParams& theta,
                        const FrozenNoise& noise, ModelGrad& grad) {
  grad = ModelGrad::zeros_like(theta, nets);
  return objective_impl(x, rows, phi, nets, theta, noise, &grad);
}

std::vector<std::span<double>> param_blocks(GenerativeParams& theta, InferenceNets& nets) {
  std::vector<std::span<double>> out;
  for (auto& c : theta.clusters) {
    auto b = param_blocks(c);
    out.insert(out.end(), b.begin(), b.end());
  }
  for (auto& stack : nets.heads) {
    for (auto& head : stack) {
      auto b = nn::param_blocks(head);
      out.insert(out.end(), b.begin(), b.end());
    }
  }
  return out;
}

std::vector<std::span<double>> param_blocks(ModelGrad& grad) {
  std::vector<std::span<double>> out;
  for (auto& c : grad.generative) {
    auto b = param_blocks(c);
    out.insert(out.end(), b.begin(), b.end());
  }
  for (auto& stack : grad.heads) {
    for (auto& head : stack) {
      auto b = nn::param_blocks(head);
      out.insert(out.end(), b.begin(), b.end());
    }
  }
  return out;
}

void apply_gradient(GenerativeParams& theta, InferenceNets& nets, ModelGrad& grad,
                    double alpha) {
  const auto params = param_blocks(theta, nets);
  const auto grads = param_blocks(grad);
  nn::sgd_step(std::span<const std::span<double>>(params),
               std::span<const std::span<double>>(grads), alpha);
}

double grad_step(const Matrix& x, std::span<const int> rows, const Matrix& phi,
                 InferenceNets& nets, GenerativeParams& theta, double alpha, int samples,
                 Rng& rng) {
  const FrozenNoise noise = FrozenNoise::draw(static_cast<int>(rows.size()), theta.truncation(),
                                              samples, theta.spec.latent_dims, rng);
  ModelGrad grad;
  const double value = network_gradient(x, rows, phi, nets, theta, noise, grad);
  apply_gradient(theta, nets, grad, alpha);
  return value;
}

}  // namespace dpdlgmm
