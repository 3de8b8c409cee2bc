#include "dpdlgmm/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "dpdlgmm/gradients.hpp"
#include "dpdlgmm/log.hpp"
#include "dpdlgmm/svi.hpp"

namespace dpdlgmm {

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("TrainConfig: " + what); };
  if (truncation < 2) fail("truncation must be >= 2");
  if (!(eta > 0.0)) fail("eta must be > 0");
  if (!(alpha >= 0.0)) fail("alpha must be >= 0");
  if (mc_samples < 1) fail("mc_samples must be >= 1");
  if (epochs < 0) fail("epochs must be >= 0");
  if (max_outer_iters < 1) fail("max_outer_iters must be >= 1");
  if (!(elbo_rel_tol >= 0.0)) fail("elbo_rel_tol must be >= 0");
  if (batch_size < 0) fail("batch_size must be >= 0");
  if (!(init_temperature > 0.0)) fail("init_temperature must be > 0");
  if (kmeans_iters < 0) fail("kmeans_iters must be >= 0");
  if (svi) {
    if (svi->batch_size < 1) fail("svi batch_size must be >= 1");
    if (!(svi->tau >= 0.0)) fail("svi tau must be >= 0");
    if (!(svi->kappa > 0.5 && svi->kappa <= 1.0)) fail("svi kappa must lie in (0.5, 1]");
  }
}

Responsibilities initialize_responsibilities(const Matrix& x, std::span<const int> labels,
                                             int truncation, double temperature,
                                             int kmeans_iters, Rng& rng) {
  const Eigen::Index N = x.rows();
  const int T = truncation;
  if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != N)
    throw std::invalid_argument("initialize_responsibilities: label count != row count");

  Matrix centers = Matrix::Zero(T, x.cols());
  std::vector<bool> placed(static_cast<size_t>(T), false);

  // Labeled classes anchor the cluster with the same index.
  bool any_label = false;
  if (!labels.empty()) {
    Vector count = Vector::Zero(T);
    for (Eigen::Index n = 0; n < N; ++n) {
      const int y = labels[static_cast<size_t>(n)];
      if (y < 0) continue;
      if (y >= T) throw std::out_of_range("label " + std::to_string(y) + " >= truncation");
      centers.row(y) += x.row(n);
      count[y] += 1.0;
      any_label = true;
    }
    for (int t = 0; t < T; ++t) {
      if (count[t] > 0) {
        centers.row(t) /= count[t];
        placed[static_cast<size_t>(t)] = true;
      }
    }
  }
  auto label_of = [&](Eigen::Index n) {
    return labels.empty() ? -1 : labels[static_cast<size_t>(n)];
  };

  // With labels, further centers are only seeded among rows farther than
  // kCoverFactor * R from every center, R being the largest distance of a
  // labeled row to its class mean. Clusters left without a center start empty.
  constexpr double kCoverFactor = 1.5;
  double cover2 = 0.0;
  if (any_label) {
    double radius2 = 0.0;
    for (Eigen::Index n = 0; n < N; ++n)
      if (label_of(n) >= 0)
        radius2 = std::max(radius2, (x.row(n) - centers.row(label_of(n))).squaredNorm());
    cover2 = kCoverFactor * kCoverFactor * radius2;
  }

  // k-means++ seeding for the rest.
  Vector d2 = Vector::Constant(N, std::numeric_limits<double>::infinity());
  auto refresh_distances = [&](int t) {
    for (Eigen::Index n = 0; n < N; ++n)
      d2[n] = std::min(d2[n], (x.row(n) - centers.row(t)).squaredNorm());
  };
  for (int t = 0; t < T; ++t)
    if (placed[static_cast<size_t>(t)]) refresh_distances(t);
  const int seeds = static_cast<int>(std::min<Eigen::Index>(T, N));
  int n_placed = static_cast<int>(std::count(placed.begin(), placed.end(), true));
  for (int t = 0; t < T && n_placed < seeds; ++t) {
    if (placed[static_cast<size_t>(t)]) continue;
    Vector weight = d2;
    if (any_label)
      for (Eigen::Index n = 0; n < N; ++n)
        if (label_of(n) >= 0 || d2[n] <= cover2) weight[n] = 0.0;
    Eigen::Index pick = 0;
    const double total = n_placed == 0 ? 0.0 : weight.sum();
    if (any_label && !(total > 0.0)) break;
    if (n_placed == 0 || !(total > 0.0) || !std::isfinite(total)) {
      pick = std::uniform_int_distribution<Eigen::Index>(0, N - 1)(rng);
    } else {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (pick = 0; pick < N - 1; ++pick) {
        u -= weight[pick];
        if (u <= 0.0) break;
      }
    }
    centers.row(t) = x.row(pick);
    placed[static_cast<size_t>(t)] = true;
    ++n_placed;
    refresh_distances(t);
  }

  // Lloyd refinement over the placed centers; labeled rows stay with their class.
  std::vector<int> nearest(static_cast<size_t>(N), 0);
  for (int iter = 0; iter < kmeans_iters; ++iter) {
    for (Eigen::Index n = 0; n < N; ++n) {
      if (label_of(n) >= 0) {
        nearest[static_cast<size_t>(n)] = label_of(n);
        continue;
      }
      double best = std::numeric_limits<double>::infinity();
      for (int t = 0; t < T; ++t) {
        if (!placed[static_cast<size_t>(t)]) continue;
        const double d = (x.row(n) - centers.row(t)).squaredNorm();
        if (d < best) {
          best = d;
          nearest[static_cast<size_t>(n)] = t;
        }
      }
    }
    Matrix sums = Matrix::Zero(T, x.cols());
    Vector count = Vector::Zero(T);
    for (Eigen::Index n = 0; n < N; ++n) {
      sums.row(nearest[static_cast<size_t>(n)]) += x.row(n);
      count[nearest[static_cast<size_t>(n)]] += 1.0;
    }
    for (int t = 0; t < T; ++t)
      if (count[t] > 0) centers.row(t) = sums.row(t) / count[t];
  }

  Responsibilities resp = Responsibilities::uniform(static_cast<int>(N), T);
  Vector scores(T);
  for (Eigen::Index n = 0; n < N; ++n) {
    for (int t = 0; t < T; ++t) {
      scores[t] = placed[static_cast<size_t>(t)]
                      ? -(x.row(n) - centers.row(t)).norm() / temperature
                      : -std::numeric_limits<double>::infinity();
    }
    const double norm = log_sum_exp(scores);
    for (int t = 0; t < T; ++t) resp.phi(n, t) = std::exp(scores[t] - norm);
  }
  if (!labels.empty()) {
    for (Eigen::Index n = 0; n < N; ++n) {
      const int y = labels[static_cast<size_t>(n)];
      if (y >= 0) resp.clamp_row(static_cast<int>(n), y);
    }
  }
  return resp;
}

Trainer::Trainer(Matrix x, std::vector<int> labels, const ModelSpec& spec,
                 const TrainConfig& cfg)
    : x_(std::move(x)), cfg_(cfg), rng_(cfg.seed) {
  cfg_.validate();
  spec.validate();
  if (x_.rows() == 0) throw std::invalid_argument("Trainer: empty data set");
  if (x_.cols() != spec.data_dim)
    throw std::invalid_argument("Trainer: data has " + std::to_string(x_.cols()) +
                                " columns, model expects " + std::to_string(spec.data_dim));
  if (!x_.allFinite()) throw std::invalid_argument("Trainer: data contains non-finite values");
  if (!labels.empty()) {
    if (static_cast<Eigen::Index>(labels.size()) != x_.rows())
      throw std::invalid_argument("Trainer: label count != row count");
    for (int y : labels) {
      if (y < -1 || y >= cfg_.truncation)
        throw std::invalid_argument("Trainer: label " + std::to_string(y + 1) +
                                    " outside 1.." + std::to_string(cfg_.truncation));
    }
  }
  theta_ = make_generative(spec, cfg_.truncation, rng_);
  state_.nets = make_inference_nets(spec, cfg_.truncation, rng_);
  state_.eta = cfg_.eta;
  state_.resp = initialize_responsibilities(x_, labels, cfg_.truncation, cfg_.init_temperature,
                                            cfg_.kmeans_iters, rng_);
  state_.gamma = update_gamma(state_.resp.phi, cfg_.eta);
  start_ = std::chrono::steady_clock::now();
}

std::vector<std::vector<int>> Trainer::shuffled_batches(int batch_size) {
  std::vector<int> order(static_cast<size_t>(x_.rows()));
  std::iota(order.begin(), order.end(), 0);
  if (batch_size <= 0 || batch_size >= x_.rows()) return {order};
  std::shuffle(order.begin(), order.end(), rng_);
  std::vector<std::vector<int>> batches;
  for (size_t i = 0; i < order.size(); i += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(order.size(), i + static_cast<size_t>(batch_size));
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

void Trainer::update_sticks() { state_.gamma = update_gamma(state_.resp.phi, cfg_.eta); }

void Trainer::update_top_layer() {
  const auto skipped = update_top_prior(state_.resp.phi, state_.nets, x_, theta_);
  if (!skipped.empty() && log_level() >= LogLevel::Debug) {
    std::ostringstream msg;
    msg << "empty clusters kept stale top-layer prior:";
    for (int t : skipped) msg << ' ' << t + 1;
    log(LogLevel::Debug, msg.str());
  }
}

void Trainer::gradient_step(std::span<const int> batch) {
  grad_step(x_, batch, state_.resp.phi, state_.nets, theta_, cfg_.alpha, cfg_.mc_samples, rng_);
  for (const auto& block : param_blocks(theta_, state_.nets)) {
    for (double v : block) {
      if (!std::isfinite(v))
        throw NumericalError("non-finite network parameter after a gradient step (alpha = " +
                             std::to_string(cfg_.alpha) + " may be too large)");
    }
  }
}

void Trainer::run_gradient_epochs() {
  for (int e = 0; e < cfg_.epochs; ++e) {
    for (const auto& batch : shuffled_batches(cfg_.batch_size)) gradient_step(batch);
  }
}

void Trainer::update_responsibilities() {
  update_phi(x_, state_.gamma, state_.nets, theta_, cfg_.mc_samples, rng_, state_.resp);
}

void Trainer::svi_epoch() {
  const SviConfig& svi = *cfg_.svi;
  for (const auto& batch : shuffled_batches(svi.batch_size)) {
    ++svi_steps_;
    svi_step(x_, batch, state_, theta_, rho_schedule(svi_steps_, svi.tau, svi.kappa));
    for (int e = 0; e < cfg_.epochs; ++e) gradient_step(batch);
    update_phi(x_, state_.gamma, state_.nets, theta_, cfg_.mc_samples, rng_, state_.resp, batch);
  }
}

const TraceRecord& Trainer::step() {
  if (cfg_.svi) {
    svi_epoch();
  } else {
    update_sticks();
    update_top_layer();
    run_gradient_epochs();
    update_responsibilities();
  }

  TraceRecord rec;
  rec.iteration = static_cast<int>(trace_.size()) + 1;
  rec.elbo = elbo(x_, state_, theta_, cfg_.mc_samples, rng_);
  if (!std::isfinite(rec.elbo))
    throw NumericalError("non-finite ELBO at outer iteration " + std::to_string(rec.iteration));
  rec.cluster_mass = cluster_mass(state_.resp.phi);
  rec.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  if (!trace_.empty()) {
    const double prev = trace_.back().elbo;
    converged_ = std::abs(rec.elbo - prev) <= cfg_.elbo_rel_tol * std::abs(prev);
  }
  trace_.push_back(std::move(rec));
  if (log_level() >= LogLevel::Info) {
    std::ostringstream msg;
    msg << "iter " << trace_.back().iteration << " elbo " << trace_.back().elbo;
    log(LogLevel::Info, msg.str());
  }
  return trace_.back();
}

const std::vector<TraceRecord>& Trainer::run(
    const std::function<void(const TraceRecord&)>& on_iteration) {
  while (static_cast<int>(trace_.size()) < cfg_.max_outer_iters && !converged_) {
    const TraceRecord& rec = step();
    if (on_iteration) on_iteration(rec);
  }
  return trace_;
}

TrainResult train(const Matrix& x, std::span<const int> labels, const ModelSpec& spec,
                  const TrainConfig& cfg) {
  Trainer trainer(x, std::vector<int>(labels.begin(), labels.end()), spec, cfg);
  trainer.run();
  return {trainer.theta(), trainer.state(), trainer.trace(), trainer.converged()};
}

std::vector<int> hard_assignments(const Matrix& phi) {
  std::vector<int> out(static_cast<size_t>(phi.rows()));
  for (Eigen::Index n = 0; n < phi.rows(); ++n) {
    Eigen::Index best = 0;
    for (Eigen::Index t = 1; t < phi.cols(); ++t)
      if (phi(n, t) > phi(n, best)) best = t;
    out[static_cast<size_t>(n)] = static_cast<int>(best);
  }
  return out;
}

}  // namespace dpdlgmm
