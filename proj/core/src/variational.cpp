#include "dpdlgmm/variational.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace dpdlgmm {

namespace {

std::vector<int> all_rows(Eigen::Index n) {
  std::vector<int> rows(static_cast<size_t>(n));
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

Vector sample_layer(const DiagGaussian& q, const Vector& eps) {
  return q.mean + (q.var.array().sqrt() * eps.array()).matrix();
}

}  // namespace

Responsibilities Responsibilities::uniform(int n, int truncation) {
  Responsibilities r;
  r.phi = Matrix::Constant(n, truncation, 1.0 / truncation);
  r.clamp.assign(static_cast<size_t>(n), kUnclamped);
  return r;
}

void Responsibilities::clamp_row(int n, int t) {
  if (n < 0 || n >= rows()) throw std::out_of_range("clamp_row: row out of range");
  if (t < 0 || t >= truncation())
    throw std::out_of_range("clamp_row: label " + std::to_string(t) + " outside [0, " +
                            std::to_string(truncation()) + ")");
  phi.row(n).setZero();
  phi(n, t) = 1.0;
  clamp[static_cast<size_t>(n)] = t;
}

void Responsibilities::validate(double tol) const {
  if (clamp.size() != static_cast<size_t>(phi.rows()))
    throw std::invalid_argument("Responsibilities: clamp vector has wrong length");
  for (int n = 0; n < rows(); ++n) {
    if ((phi.row(n).array() < 0.0).any())
      throw std::invalid_argument("Responsibilities: negative entry in row " + std::to_string(n));
    if (std::abs(phi.row(n).sum() - 1.0) > tol)
      throw std::invalid_argument("Responsibilities: row " + std::to_string(n) +
                                  " does not sum to 1");
    if (is_clamped(n) && phi(n, clamp[static_cast<size_t>(n)]) != 1.0)
      throw std::invalid_argument("Responsibilities: clamped row " + std::to_string(n) +
                                  " is not one-hot");
  }
}

std::vector<DiagGaussian> InferenceNets::recognize(int t, const Vector& x) const {
  const auto& stack = heads.at(static_cast<size_t>(t));
  std::vector<DiagGaussian> out;
  out.reserve(stack.size());
  for (const auto& head : stack) out.push_back(nn::head_forward(head, x));
  return out;
}

InferenceNets make_inference_nets(const ModelSpec& spec, int truncation, Rng& rng) {
  spec.validate();
  InferenceNets nets;
  nets.heads.resize(static_cast<size_t>(truncation));
  for (auto& stack : nets.heads) {
    for (int p : spec.latent_dims) {
      stack.push_back(nn::GaussianHead::make(spec.data_dim, spec.hidden, p, rng));
    }
  }
  return nets;
}

Vector cluster_mass(const Matrix& phi, std::span<const int> rows) {
  Vector mass = Vector::Zero(phi.cols());
  if (rows.empty()) {
    for (Eigen::Index n = 0; n < phi.rows(); ++n) mass += phi.row(n).transpose();
  } else {
    for (int n : rows) mass += phi.row(n).transpose();
  }
  return mass;
}

StickPosterior gamma_from_mass(const Vector& mass, double eta, double scale) {
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
  const Eigen::Index T = mass.size();
  if (T < 1) throw std::invalid_argument("gamma_from_mass: empty mass vector");
  StickPosterior g;
  g.gamma1.resize(T - 1);
  g.gamma2.resize(T - 1);
  double tail = 0.0;  // sum_{r > t} N_r
  for (Eigen::Index t = T - 1; t >= 1; --t) {
    tail += mass[t];
    g.gamma2[t - 1] = eta + scale * tail;
  }
  for (Eigen::Index t = 0; t < T - 1; ++t) g.gamma1[t] = 1.0 + scale * mass[t];
  return g;
}

StickPosterior update_gamma(const Matrix& phi, double eta) {
  return gamma_from_mass(cluster_mass(phi), eta);
}

LatentStack draw_standard_stack(std::span<const int> latent_dims, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  LatentStack eps(latent_dims.size());
  for (size_t k = 0; k < latent_dims.size(); ++k) {
    eps[k].resize(latent_dims[k]);
    for (Eigen::Index j = 0; j < eps[k].size(); ++j) eps[k][j] = n01(rng);
  }
  return eps;
}

namespace {

std::vector<LatentStack> draw_noise(const GenerativeParams& theta, int samples, Rng& rng) {
  if (samples < 1) throw std::invalid_argument("Monte-Carlo sample count must be >= 1");
  std::vector<LatentStack> eps;
  eps.reserve(static_cast<size_t>(samples));
  for (int s = 0; s < samples; ++s) eps.push_back(draw_standard_stack(theta.spec.latent_dims, rng));
  return eps;
}

// Closed-form top term plus the sample mean of the remaining factors.
double expected_log_joint(const Vector& x, int t, const std::vector<DiagGaussian>& q,
                          const GenerativeParams& theta, const std::vector<LatentStack>& eps) {
  const int L = theta.num_layers();
  double acc = 0.0;
  LatentStack h(static_cast<size_t>(L));
  for (const auto& e : eps) {
    for (int k = 0; k < L; ++k) h[k] = sample_layer(q[k], e[k]);
    acc += conditional_log_prob(theta, t, x, h);
  }
  return expected_top_log_prob(theta, t, q.back()) + acc / static_cast<double>(eps.size());
}

double total_entropy(const std::vector<DiagGaussian>& q) {
  double h = 0.0;
  for (const auto& g : q) h += gaussian_entropy_diag(g.var);
  return h;
}

}  // namespace

double mc_expected_log_joint(const Vector& x, int t, const InferenceNets& nets,
                             const GenerativeParams& theta, int samples, Rng& rng) {
  return expected_log_joint(x, t, nets.recognize(t, x), theta, draw_noise(theta, samples, rng));
}

Vector responsibility_scores(const Vector& x, const Vector& expected_log_pi,
                             const InferenceNets& nets, const GenerativeParams& theta,
                             int samples, Rng& rng) {
  const int T = theta.truncation();
  const auto eps = draw_noise(theta, samples, rng);
  Vector scores(T);
  for (int t = 0; t < T; ++t) {
    const auto q = nets.recognize(t, x);
    scores[t] = expected_log_pi[t] + expected_log_joint(x, t, q, theta, eps) + total_entropy(q);
  }
  return scores;
}

void update_phi(const Matrix& x, const StickPosterior& gamma, const InferenceNets& nets,
                const GenerativeParams& theta, int samples, Rng& rng,
                Responsibilities& resp, std::span<const int> rows) {
  const int T = theta.truncation();
  if (resp.truncation() != T || gamma.truncation() != T || nets.truncation() != T)
    throw std::invalid_argument("update_phi: truncation mismatch between state and model");
  const Vector elpi = expected_log_pi_all(gamma);
  const std::vector<int> every = rows.empty() ? all_rows(x.rows()) : std::vector<int>();
  const std::span<const int> order = rows.empty() ? std::span<const int>(every) : rows;
  for (int n : order) {
    if (resp.is_clamped(n)) continue;
    const Vector scores =
        responsibility_scores(x.row(n).transpose(), elpi, nets, theta, samples, rng);
    const double norm = log_sum_exp(scores);
    if (!std::isfinite(norm)) {
      throw NumericalError("update_phi: non-finite log-normalizer at row " + std::to_string(n));
    }
    for (int t = 0; t < T; ++t) resp.phi(n, t) = std::exp(scores[t] - norm);
  }
}

TopPriorEstimate estimate_top_prior(const Matrix& phi, const InferenceNets& nets,
                                    const Matrix& x, std::span<const int> rows) {
  const int T = static_cast<int>(phi.cols());
  const std::vector<int> every = rows.empty() ? all_rows(x.rows()) : std::vector<int>();
  const std::span<const int> order = rows.empty() ? std::span<const int>(every) : rows;

  TopPriorEstimate est;
  est.mass = cluster_mass(phi, rows);
  est.mean.resize(T);
  est.var.resize(T);
  est.defined.assign(static_cast<size_t>(T), false);
  for (int t = 0; t < T; ++t) {
    const auto& head = nets.heads.at(static_cast<size_t>(t)).back();
    const double mass = est.mass[t];
    if (mass < kEmptyClusterMass) continue;
    std::vector<DiagGaussian> q(order.size());
    Vector m = Vector::Zero(head.out_dim());
    for (size_t i = 0; i < order.size(); ++i) {
      const double w = phi(order[i], t);
      if (w == 0.0) continue;
      q[i] = nn::head_forward(head, x.row(order[i]).transpose());
      m += w * q[i].mean;
    }
    m /= mass;
    Vector v = Vector::Zero(head.out_dim());
    for (size_t i = 0; i < order.size(); ++i) {
      const double w = phi(order[i], t);
      if (w == 0.0) continue;
      v += w * (q[i].var.array() + (q[i].mean - m).array().square()).matrix();
    }
    v /= mass;
    est.mean[t] = std::move(m);
    est.var[t] = v.cwiseMax(kVarianceFloor);
    est.defined[t] = true;
  }
  return est;
}

std::vector<int> update_top_prior(const Matrix& phi, const InferenceNets& nets,
                                  const Matrix& x, GenerativeParams& theta) {
  TopPriorEstimate est = estimate_top_prior(phi, nets, x);
  std::vector<int> skipped;
  for (int t = 0; t < theta.truncation(); ++t) {
    if (!est.defined[t]) {
      skipped.push_back(t);
      continue;
    }
    theta.clusters[t].top_mean = std::move(est.mean[t]);
    theta.clusters[t].top_var = std::move(est.var[t]);
  }
  return skipped;
}

double top_prior_objective(const Matrix& phi, const InferenceNets& nets, const Matrix& x,
                           const GenerativeParams& theta) {
  double value = 0.0;
  for (int t = 0; t < theta.truncation(); ++t) {
    const DiagGaussian prior{theta.clusters[t].top_mean, theta.clusters[t].top_var};
    const auto& head = nets.heads.at(static_cast<size_t>(t)).back();
    for (Eigen::Index n = 0; n < x.rows(); ++n) {
      if (phi(n, t) == 0.0) continue;
      value -= phi(n, t) * kl_diag_gaussian(nn::head_forward(head, x.row(n).transpose()), prior);
    }
  }
  return value;
}

double elbo(const Matrix& x, const VariationalState& state, const GenerativeParams& theta,
            int samples, Rng& rng) {
  const int T = theta.truncation();
  const Matrix& phi = state.resp.phi;
  if (phi.rows() != x.rows() || phi.cols() != T)
    throw std::invalid_argument("elbo: responsibilities do not match data/model");
  const Vector elpi = expected_log_pi_all(state.gamma);
  double value = 0.0;
  for (Eigen::Index n = 0; n < x.rows(); ++n) {
    const Vector xn = x.row(n).transpose();
    for (int t = 0; t < T; ++t) {
      const double w = phi(n, t);
      if (w == 0.0) {
        for (int s = 0; s < samples; ++s) draw_standard_stack(theta.spec.latent_dims, rng);
        continue;
      }
      const auto q = state.nets.recognize(t, xn);
      const double joint = expected_log_joint(xn, t, q, theta, draw_noise(theta, samples, rng));
      value += w * (joint + total_entropy(q) + elpi[t] - std::log(w));
    }
  }
  for (int t = 0; t < T - 1; ++t) {
    value -= kl_beta({state.gamma.gamma1[t], state.gamma.gamma2[t]}, {1.0, state.eta});
  }
  if (!std::isfinite(value)) throw NumericalError("elbo: non-finite value");
  return value;
}

Vector predict_cluster(const Vector& x, const VariationalState& state,
                       const GenerativeParams& theta, int samples, Rng& rng) {
  if (samples < 1) throw std::invalid_argument("predict_cluster: samples must be >= 1");
  const int T = theta.truncation();
  const Vector weights = expected_stick_weights(state.gamma);
  const double log_s = std::log(static_cast<double>(samples));
  Vector scores(T);
  const auto eps = draw_noise(theta, samples, rng);
  std::vector<double> per_sample(static_cast<size_t>(samples));
  for (int t = 0; t < T; ++t) {
    const auto q = state.nets.recognize(t, x);
    for (int s = 0; s < samples; ++s) {
      const Vector h1 = sample_layer(q.front(), eps[static_cast<size_t>(s)].front());
      per_sample[static_cast<size_t>(s)] = theta.clusters[t].emission.log_prob(h1, x);
    }
    scores[t] = std::log(weights[t]) + log_sum_exp(per_sample) - log_s;
  }
  const double norm = log_sum_exp(scores);
  if (!std::isfinite(norm)) throw NumericalError("predict_cluster: non-finite normalizer");
  return (scores.array() - norm).exp().matrix();
}

}  // namespace dpdlgmm
