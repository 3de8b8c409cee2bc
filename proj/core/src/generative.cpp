#include "dpdlgmm/generative.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dpdlgmm {

namespace {

const double kLogTwoPi = std::log(2.0 * std::numbers::pi);

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_cluster(const GenerativeParams& theta, int t) {
  if (t < 0 || t >= theta.truncation()) {
    throw std::out_of_range("cluster index " + std::to_string(t) + " outside [0, " +
                            std::to_string(theta.truncation()) + ")");
  }
}

void check_stack(const GenerativeParams& theta, const LatentStack& h) {
  if (static_cast<int>(h.size()) != theta.num_layers()) {
    throw std::invalid_argument("latent stack has " + std::to_string(h.size()) +
                                " layers, model has " + std::to_string(theta.num_layers()));
  }
  for (size_t k = 0; k < h.size(); ++k) {
    if (h[k].size() != theta.spec.latent_dims[k]) {
      throw std::invalid_argument("latent layer " + std::to_string(k + 1) +
                                  ": expected dimension " +
                                  std::to_string(theta.spec.latent_dims[k]) + ", found " +
                                  std::to_string(h[k].size()));
    }
  }
}

// ln N(x; mean, diag(var)).
double gaussian_term(const Vector& x, const Vector& mean, const Vector& var) {
  double lp = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double d = x[j] - mean[j];
    lp += -0.5 * (kLogTwoPi + std::log(var[j])) - 0.5 * d * d / var[j];
  }
  return lp;
}

}  // namespace

const char* to_string(EmissionKind kind) {
  return kind == EmissionKind::Bernoulli ? "bernoulli" : "gaussian";
}

EmissionKind parse_emission_kind(const std::string& name) {
  if (name == "bernoulli") return EmissionKind::Bernoulli;
  if (name == "gaussian") return EmissionKind::Gaussian;
  throw std::invalid_argument("unknown emission kind '" + name +
                              "' (expected bernoulli or gaussian)");
}

void ModelSpec::validate() const {
  if (data_dim < 1) throw std::invalid_argument("ModelSpec: data_dim must be >= 1");
  if (latent_dims.empty()) throw std::invalid_argument("ModelSpec: need at least one latent layer");
  for (int p : latent_dims)
    if (p < 1) throw std::invalid_argument("ModelSpec: latent dimensions must be >= 1");
  for (int w : hidden)
    if (w < 1) throw std::invalid_argument("ModelSpec: hidden widths must be >= 1");
}

Emission Emission::make(EmissionKind kind, int latent_dim, std::span<const int> hidden,
                        int data_dim, Rng& rng) {
  if (kind == EmissionKind::Bernoulli) {
    return Emission(nn::Mlp::make(latent_dim, hidden, data_dim, nn::Activation::Identity, rng));
  }
  return Emission(nn::GaussianHead::make(latent_dim, hidden, data_dim, rng));
}

EmissionKind Emission::kind() const {
  return std::holds_alternative<nn::Mlp>(net_) ? EmissionKind::Bernoulli
                                               : EmissionKind::Gaussian;
}

int Emission::in_dim() const {
  return std::visit([](const auto& n) { return n.in_dim(); }, net_);
}

int Emission::out_dim() const {
  return std::visit([](const auto& n) { return n.out_dim(); }, net_);
}

double Emission::log_prob(const Vector& h1, const Vector& x) const {
  if (x.size() != out_dim()) {
    throw std::invalid_argument("emission: expected data dimension " +
                                std::to_string(out_dim()) + ", found " +
                                std::to_string(x.size()));
  }
  return std::visit(
      overloaded{[&](const nn::Mlp& net) {
                   const Vector logits = nn::forward(net, h1);
                   double lp = 0.0;
                   for (Eigen::Index j = 0; j < x.size(); ++j)
                     lp += x[j] * logits[j] - softplus(logits[j]);
                   return lp;
                 },
                 [&](const nn::GaussianHead& head) {
                   const DiagGaussian g = nn::head_forward(head, h1);
                   return gaussian_term(x, g.mean, g.var);
                 }},
      net_);
}

double Emission::log_prob_backward(const Vector& h1, const Vector& x, double weight,
                                   EmissionGrad& grad, Vector& grad_h1) const {
  if (x.size() != out_dim()) {
    throw std::invalid_argument("emission: expected data dimension " +
                                std::to_string(out_dim()) + ", found " +
                                std::to_string(x.size()));
  }
  return std::visit(
      overloaded{
          [&](const nn::Mlp& net) {
            nn::MlpCache cache;
            const Vector logits = nn::forward(net, h1, &cache);
            double lp = 0.0;
            Vector d_logits(x.size());
            for (Eigen::Index j = 0; j < x.size(); ++j) {
              lp += x[j] * logits[j] - softplus(logits[j]);
              d_logits[j] = x[j] - sigmoid(logits[j]);
            }
            grad_h1 = nn::backward(net, cache, d_logits, std::get<nn::MlpGrad>(grad.net), weight);
            return lp;
          },
          [&](const nn::GaussianHead& head) {
            nn::HeadCache cache;
            const DiagGaussian g = nn::head_forward(head, h1, &cache);
            Vector d_mean(x.size());
            Vector d_var(x.size());
            for (Eigen::Index j = 0; j < x.size(); ++j) {
              const double d = x[j] - g.mean[j];
              d_mean[j] = d / g.var[j];
              d_var[j] = 0.5 * (d * d / (g.var[j] * g.var[j]) - 1.0 / g.var[j]);
            }
            grad_h1 = nn::head_backward(head, cache, d_mean, d_var,
                                        std::get<nn::GaussianHeadGrad>(grad.net), weight);
            return gaussian_term(x, g.mean, g.var);
          }},
      net_);
}

Vector Emission::mean(const Vector& h1) const {
  return std::visit(overloaded{[&](const nn::Mlp& net) {
                                 Vector p = nn::forward(net, h1);
                                 for (Eigen::Index j = 0; j < p.size(); ++j)
                                   p[j] = sigmoid(p[j]);
                                 return p;
                               },
                               [&](const nn::GaussianHead& head) {
                                 return nn::head_forward(head, h1).mean;
                               }},
                    net_);
}

Vector Emission::sample(const Vector& h1, Rng& rng) const {
  return std::visit(overloaded{[&](const nn::Mlp& net) {
                                 const Vector logits = nn::forward(net, h1);
                                 std::uniform_real_distribution<double> u(0.0, 1.0);
                                 Vector x(logits.size());
                                 for (Eigen::Index j = 0; j < x.size(); ++j)
                                   x[j] = u(rng) < sigmoid(logits[j]) ? 1.0 : 0.0;
                                 return x;
                               },
                               [&](const nn::GaussianHead& head) {
                                 const DiagGaussian g = nn::head_forward(head, h1);
                                 std::normal_distribution<double> n01(0.0, 1.0);
                                 Vector x(g.mean.size());
                                 for (Eigen::Index j = 0; j < x.size(); ++j)
                                   x[j] = g.mean[j] + std::sqrt(g.var[j]) * n01(rng);
                                 return x;
                               }},
                    net_);
}

EmissionGrad Emission::zero_grad() const {
  return std::visit(
      overloaded{[](const nn::Mlp& net) { return EmissionGrad{nn::MlpGrad::zeros_like(net)}; },
                 [](const nn::GaussianHead& head) {
                   return EmissionGrad{nn::GaussianHeadGrad::zeros_like(head)};
                 }},
      net_);
}

Vector ClusterGenerative::noise_var(int k) const {
  const Vector& raw = noise_raw.at(static_cast<size_t>(k));
  Vector var(raw.size());
  for (Eigen::Index j = 0; j < raw.size(); ++j) var[j] = variance_from_raw(raw[j]);
  return var;
}

ClusterGenerativeGrad ClusterGenerativeGrad::zeros_like(const ClusterGenerative& c) {
  ClusterGenerativeGrad g;
  for (const auto& map : c.layer_maps) g.layer_maps.push_back(nn::MlpGrad::zeros_like(map));
  for (const auto& raw : c.noise_raw) g.noise_raw.push_back(Vector::Zero(raw.size()));
  g.emission = c.emission.zero_grad();
  return g;
}

void GenerativeParams::validate() const {
  spec.validate();
  const int L = num_layers();
  for (int t = 0; t < truncation(); ++t) {
    const auto& c = clusters[t];
    const std::string where = "cluster " + std::to_string(t) + ": ";
    const int top = spec.latent_dims.back();
    if (c.top_mean.size() != top || c.top_var.size() != top)
      throw std::invalid_argument(where + "top layer has wrong dimension");
    for (Eigen::Index j = 0; j < c.top_var.size(); ++j)
      if (!(c.top_var[j] >= kVarianceFloor))
        throw std::invalid_argument(where + "top variance below floor");
    if (static_cast<int>(c.layer_maps.size()) != L - 1 ||
        static_cast<int>(c.noise_raw.size()) != L - 1)
      throw std::invalid_argument(where + "expected " + std::to_string(L - 1) + " layer maps");
    for (int k = 0; k < L - 1; ++k) {
      if (c.layer_maps[k].in_dim() != spec.latent_dims[k + 1] ||
          c.layer_maps[k].out_dim() != spec.latent_dims[k] ||
          c.noise_raw[k].size() != spec.latent_dims[k])
        throw std::invalid_argument(where + "layer map " + std::to_string(k + 1) +
                                    " does not chain");
    }
    if (c.emission.kind() != spec.emission || c.emission.in_dim() != spec.latent_dims.front() ||
        c.emission.out_dim() != spec.data_dim)
      throw std::invalid_argument(where + "emission network does not match the model shape");
  }
}

GenerativeParams make_generative(const ModelSpec& spec, int truncation, Rng& rng) {
  spec.validate();
  if (truncation < 1) throw std::invalid_argument("make_generative: truncation must be >= 1");
  GenerativeParams theta;
  theta.spec = spec;
  const int L = spec.num_layers();
  const double unit_raw = raw_from_variance(1.0);
  for (int t = 0; t < truncation; ++t) {
    ClusterGenerative c;
    c.top_mean = Vector::Zero(spec.latent_dims.back());
    c.top_var = Vector::Ones(spec.latent_dims.back());
    for (int k = 0; k < L - 1; ++k) {
      c.layer_maps.push_back(nn::Mlp::make(spec.latent_dims[k + 1], spec.hidden,
                                           spec.latent_dims[k], nn::Activation::Identity, rng));
      c.noise_raw.push_back(Vector::Constant(spec.latent_dims[k], unit_raw));
    }
    c.emission = Emission::make(spec.emission, spec.latent_dims.front(), spec.hidden,
                                spec.data_dim, rng);
    theta.clusters.push_back(std::move(c));
  }
  return theta;
}

std::vector<std::span<double>> param_blocks(ClusterGenerative& c) {
  std::vector<std::span<double>> out;
  for (auto& map : c.layer_maps) {
    auto b = nn::param_blocks(map);
    out.insert(out.end(), b.begin(), b.end());
  }
  for (auto& raw : c.noise_raw) out.push_back(nn::as_span(raw));
  auto e = std::visit([](auto& n) { return nn::param_blocks(n); }, c.emission.net());
  out.insert(out.end(), e.begin(), e.end());
  return out;
}

std::vector<std::span<double>> param_blocks(ClusterGenerativeGrad& g) {
  std::vector<std::span<double>> out;
  for (auto& map : g.layer_maps) {
    auto b = nn::param_blocks(map);
    out.insert(out.end(), b.begin(), b.end());
  }
  for (auto& raw : g.noise_raw) out.push_back(nn::as_span(raw));
  auto e = std::visit([](auto& n) { return nn::param_blocks(n); }, g.emission.net);
  out.insert(out.end(), e.begin(), e.end());
  return out;
}

StickWeights stick_breaking(const Vector& beta) {
  if (beta.size() == 0) throw std::invalid_argument("stick_breaking: empty beta");
  for (Eigen::Index k = 0; k < beta.size(); ++k) {
    if (!(beta[k] >= 0.0 && beta[k] <= 1.0))
      throw std::invalid_argument("stick_breaking: beta[" + std::to_string(k) +
                                  "] outside [0, 1]");
  }
  if (beta[beta.size() - 1] != 1.0)
    throw std::invalid_argument("stick_breaking: last stick must equal 1");
  StickWeights w;
  w.pi.resize(beta.size());
  double remaining = 1.0;
  for (Eigen::Index k = 0; k < beta.size(); ++k) {
    w.pi[k] = beta[k] * remaining;
    remaining *= 1.0 - beta[k];
  }
  return w;
}

Vector sample_prior_sticks(double eta, int truncation, Rng& rng) {
  if (!(eta > 0.0)) throw std::invalid_argument("sample_prior_sticks: eta must be > 0");
  if (truncation < 1) throw std::invalid_argument("sample_prior_sticks: truncation must be >= 1");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector beta(truncation);
  for (int k = 0; k < truncation - 1; ++k) {
    // Inverse CDF of Beta(1, eta): F(b) = 1 - (1 - b)^eta.
    beta[k] = -std::expm1(std::log1p(-u(rng)) / eta);
  }
  beta[truncation - 1] = 1.0;
  return beta;
}

LatentStack propagate_noise(const GenerativeParams& theta, int t, const LatentStack& eps) {
  check_cluster(theta, t);
  check_stack(theta, eps);
  const auto& c = theta.clusters[t];
  const int L = theta.num_layers();
  LatentStack h(L);
  h[L - 1] = c.top_mean + (c.top_var.array().sqrt() * eps[L - 1].array()).matrix();
  for (int k = L - 2; k >= 0; --k) {
    const Vector s = c.noise_var(k).array().sqrt();
    h[k] = nn::forward(c.layer_maps[k], h[k + 1]) + (s.array() * eps[k].array()).matrix();
  }
  return h;
}

Vector sample_from_cluster(const GenerativeParams& theta, int t, Rng& rng,
                           LatentStack* latents) {
  check_cluster(theta, t);
  const int L = theta.num_layers();
  std::normal_distribution<double> n01(0.0, 1.0);
  LatentStack eps(L);
  for (int k = L - 1; k >= 0; --k) {
    eps[k].resize(theta.spec.latent_dims[k]);
    for (Eigen::Index j = 0; j < eps[k].size(); ++j) eps[k][j] = n01(rng);
  }
  LatentStack h = propagate_noise(theta, t, eps);
  Vector x = theta.clusters[t].emission.sample(h.front(), rng);
  if (latents != nullptr) *latents = std::move(h);
  return x;
}

GenerativeSample sample_generative(const GenerativeParams& theta, const StickWeights& pi,
                                   int n, Rng& rng) {
  theta.validate();
  if (pi.pi.size() != theta.truncation())
    throw std::invalid_argument("sample_generative: weight vector length != truncation");
  if (n < 0) throw std::invalid_argument("sample_generative: negative sample count");
  std::discrete_distribution<int> pick(pi.pi.data(), pi.pi.data() + pi.pi.size());
  GenerativeSample out;
  out.x.resize(n, theta.spec.data_dim);
  out.z.resize(n);
  out.h.resize(n);
  for (int i = 0; i < n; ++i) {
    out.z[i] = pick(rng);
    out.x.row(i) = sample_from_cluster(theta, out.z[i], rng, &out.h[i]).transpose();
  }
  return out;
}

double top_log_prob(const GenerativeParams& theta, int t, const Vector& top) {
  check_cluster(theta, t);
  const auto& c = theta.clusters[t];
  if (top.size() != c.top_mean.size())
    throw std::invalid_argument("top_log_prob: dimension mismatch");
  return gaussian_term(top, c.top_mean, c.top_var);
}

double expected_top_log_prob(const GenerativeParams& theta, int t, const DiagGaussian& q) {
  check_cluster(theta, t);
  const auto& c = theta.clusters[t];
  if (q.mean.size() != c.top_mean.size())
    throw std::invalid_argument("expected_top_log_prob: dimension mismatch");
  double value = 0.0;
  for (Eigen::Index j = 0; j < q.mean.size(); ++j) {
    const double d = q.mean[j] - c.top_mean[j];
    value += -0.5 * (kLogTwoPi + std::log(c.top_var[j])) - 0.5 * (q.var[j] + d * d) / c.top_var[j];
  }
  return value;
}

double conditional_log_prob(const GenerativeParams& theta, int t, const Vector& x,
                            const LatentStack& h) {
  check_cluster(theta, t);
  check_stack(theta, h);
  const auto& c = theta.clusters[t];
  double lp = 0.0;
  for (int k = 0; k + 1 < theta.num_layers(); ++k) {
    lp += gaussian_term(h[k], nn::forward(c.layer_maps[k], h[k + 1]), c.noise_var(k));
  }
  return lp + c.emission.log_prob(h.front(), x);
}

double conditional_log_prob_backward(const GenerativeParams& theta, int t, const Vector& x,
                                     const LatentStack& h, double weight,
                                     ClusterGenerativeGrad& grad, LatentStack& grad_h) {
  check_cluster(theta, t);
  check_stack(theta, h);
  const auto& c = theta.clusters[t];
  const int L = theta.num_layers();
  grad_h.assign(L, Vector());
  for (int k = 0; k < L; ++k) grad_h[k] = Vector::Zero(h[k].size());

  Vector grad_h1;
  double lp = c.emission.log_prob_backward(h.front(), x, weight, grad.emission, grad_h1);
  grad_h[0] += grad_h1;

  for (int k = 0; k + 1 < L; ++k) {
    nn::MlpCache cache;
    const Vector pred = nn::forward(c.layer_maps[k], h[k + 1], &cache);
    const Vector var = c.noise_var(k);
    const Vector& raw = c.noise_raw[k];
    lp += gaussian_term(h[k], pred, var);
    const Vector r = h[k] - pred;
    Vector d_pred(r.size());
    for (Eigen::Index j = 0; j < r.size(); ++j) {
      d_pred[j] = r[j] / var[j];
      const double d_var = 0.5 * (r[j] * r[j] / (var[j] * var[j]) - 1.0 / var[j]);
      grad.noise_raw[k][j] += weight * d_var * variance_from_raw_grad(raw[j]);
    }
    grad_h[k] -= d_pred;
    grad_h[k + 1] += nn::backward(c.layer_maps[k], cache, d_pred, grad.layer_maps[k], weight);
  }
  return lp;
}

double joint_log_prob(const GenerativeParams& theta, int t, const Vector& x,
                      const LatentStack& h) {
  check_stack(theta, h);
  return top_log_prob(theta, t, h.back()) + conditional_log_prob(theta, t, x, h);
}

}  // namespace dpdlgmm
