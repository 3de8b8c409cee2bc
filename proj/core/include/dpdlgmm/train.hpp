#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "dpdlgmm/generative.hpp"
#include "dpdlgmm/variational.hpp"

namespace dpdlgmm {

/// Minibatch schedule for stochastic updates of gamma, m and V.
struct SviConfig {
  int batch_size = 100;
  double tau = 1.0;
  double kappa = 0.75;
};

struct TrainConfig {
  int truncation = 10;          // T
  double eta = 1.0;             // DP concentration
  double alpha = 1e-3;          // gradient-ascent step size
  int mc_samples = 1;           // S
  int epochs = 1;               // E, gradient epochs per outer iteration
  int max_outer_iters = 100;
  double elbo_rel_tol = 1e-5;
  std::uint64_t seed = 0;
  int batch_size = 0;           // gradient minibatch; 0 means the full data set
  std::optional<SviConfig> svi;
  double init_temperature = 1.0;
  int kmeans_iters = 20;

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

/// One row of the training trace.
struct TraceRecord {
  int iteration = 0;
  double elbo = 0.0;
  Vector cluster_mass;  // N_t
  double seconds = 0.0;
};

/// Soft k-means++ initialization of the responsibilities.
///
/// Classes that carry labels get their labeled mean as the center of the
/// cluster with the same index; the remaining centers are seeded by D^2
/// sampling and refined with Lloyd iterations. When labels are present,
/// seeds are drawn only from rows far outside every labeled class (1.5 times
/// the largest labeled distance to a class mean) and clusters without a seed
/// start with zero responsibility. Rows are then set to a
/// softmax over negative Euclidean distances divided by `temperature`, and
/// labeled rows are clamped. `labels` is empty or holds a 0-based cluster
/// per row, -1 for unlabeled.
Responsibilities initialize_responsibilities(const Matrix& x, std::span<const int> labels,
                                             int truncation, double temperature,
                                             int kmeans_iters, Rng& rng);

/// Variational training loop. Each outer iteration updates gamma, then
/// (m, V), then runs E epochs of gradient ascent on the networks, then
/// updates phi, and finally records the ELBO. With an SVI schedule an outer
/// iteration is one pass of minibatch updates instead.
class Trainer {
 public:
  Trainer(Matrix x, std::vector<int> labels, const ModelSpec& spec, const TrainConfig& cfg);

  /// Runs one outer iteration and returns its trace record.
  const TraceRecord& step();

  /// Iterates until convergence or max_outer_iters. `on_iteration` is called
  /// after every record.
  const std::vector<TraceRecord>& run(
      const std::function<void(const TraceRecord&)>& on_iteration = {});

  // Pieces of a batch outer iteration, in the order step() applies them.
  void update_sticks();
  void update_top_layer();
  void run_gradient_epochs();
  void update_responsibilities();

  bool converged() const { return converged_; }
  const Matrix& data() const { return x_; }
  const GenerativeParams& theta() const { return theta_; }
  GenerativeParams& theta() { return theta_; }
  const VariationalState& state() const { return state_; }
  VariationalState& state() { return state_; }
  const std::vector<TraceRecord>& trace() const { return trace_; }
  const TrainConfig& config() const { return cfg_; }
  Rng& rng() { return rng_; }

 private:
  void svi_epoch();
  void gradient_step(std::span<const int> batch);
  std::vector<std::vector<int>> shuffled_batches(int batch_size);

  Matrix x_;
  TrainConfig cfg_;
  GenerativeParams theta_;
  VariationalState state_;
  Rng rng_;
  std::vector<TraceRecord> trace_;
  long svi_steps_ = 0;
  bool converged_ = false;
  std::chrono::steady_clock::time_point start_;
};

struct TrainResult {
  GenerativeParams theta;
  VariationalState state;
  std::vector<TraceRecord> trace;
  bool converged = false;
};

/// Convenience wrapper around Trainer::run.
TrainResult train(const Matrix& x, std::span<const int> labels, const ModelSpec& spec,
                  const TrainConfig& cfg);

/// Row-wise argmax, ties to the lowest index.
std::vector<int> hard_assignments(const Matrix& phi);

}  // namespace dpdlgmm
