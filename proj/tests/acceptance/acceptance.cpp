// Acceptance checks. Run with a criterion number (1-10) or no argument for all.
// Each check prints one PASS/FAIL line; the exit status is non-zero if any fails.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dpdlgmm/data_io.hpp"
#include "dpdlgmm/gradients.hpp"
#include "dpdlgmm/metrics.hpp"
#include "dpdlgmm/svi.hpp"
#include "dpdlgmm/train.hpp"
#include "dpdlgmm/variational.hpp"
#include "dpdlgmm_tools/checkpoint.hpp"
#include "dpdlgmm_tools/commands.hpp"
#include "toy.hpp"

namespace {

using namespace dpdlgmm;
using Clock = std::chrono::steady_clock;
using testing::random_matrix;
using testing::random_phi;
using testing::spec_of;
using Model = testing::Toy;

Model random_model(const ModelSpec& spec, int T, Rng& rng) { return testing::random_toy(spec, T, rng); }

// Tolerances and limits.
constexpr double kGammaTol = 1e-12;         // 1
constexpr double kStationarityTol = 1e-5;   // 2
constexpr double kFdRel = 1e-4;             // 3
constexpr double kFdAbs = 1e-7;             // 3
constexpr double kBoundMargin = -1e-6;      // 4
constexpr double kMonotoneSlack = 1e-8;     // 5
constexpr double kMinAri = 0.9;             // 6
constexpr double kMinSemiAccuracy = 0.95;   // 7
constexpr double kMinSemiGain = 0.05;       // 7
constexpr double kSviTol = 1e-4;            // 8
constexpr double kSumTol = 1e-9;            // 9
constexpr double kUniformTol = 1e-6;        // 9

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

// ---- shared helpers -------------------------------------------------------

std::vector<int> all_rows(int n) {
  std::vector<int> v(static_cast<size_t>(n));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

// ---- 1. closed-form stick update -----------------------------------------

Outcome criterion_1() {
  const auto t0 = Clock::now();
  Rng rng(101);
  std::uniform_int_distribution<int> n_dist(1, 100), t_dist(2, 10);
  std::uniform_real_distribution<double> eta_dist(0.05, 10.0);
  double worst = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const int N = n_dist(rng), T = t_dist(rng);
    const double eta = eta_dist(rng);
    const Matrix phi = random_phi(N, T, rng);
    const StickPosterior g = update_gamma(phi, eta);
    for (int t = 0; t < T - 1; ++t) {
      double own = 0.0, tail = 0.0;
      for (int n = 0; n < N; ++n) {
        own += phi(n, t);
        for (int r = t + 1; r < T; ++r) tail += phi(n, r);
      }
      worst = std::max({worst, std::abs(g.gamma1[t] - (1.0 + own)),
                        std::abs(g.gamma2[t] - (eta + tail))});
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= kGammaTol && secs < 1.0,
          "max |error| " + fmt(worst) + " over 50 instances, " + fmt(secs) + " s"};
}

// ---- 2. top-layer prior stationarity --------------------------------------

Outcome criterion_2() {
  const auto t0 = Clock::now();
  Rng rng(202);
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const int T = 2 + inst % 4, N = 10 + 3 * inst;
    const auto spec = spec_of(EmissionKind::Gaussian, 3, {2, 1 + inst % 3}, {5});
    Model m = random_model(spec, T, rng);
    const Matrix x = random_matrix(N, 3, rng);
    const Matrix phi = random_phi(N, T, rng);
    update_top_prior(phi, m.nets, x, m.theta);
    for (auto& c : m.theta.clusters) {
      for (Vector* v : {&c.top_mean, &c.top_var}) {
        for (Eigen::Index j = 0; j < v->size(); ++j) {
          const double saved = (*v)[j], h = 1e-5 * std::max(1.0, std::abs(saved));
          (*v)[j] = saved + h;
          const double up = top_prior_objective(phi, m.nets, x, m.theta);
          (*v)[j] = saved - h;
          const double down = top_prior_objective(phi, m.nets, x, m.theta);
          (*v)[j] = saved;
          worst = std::max(worst, std::abs((up - down) / (2.0 * h)));
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= kStationarityTol && secs < 10.0,
          "max |finite-difference gradient| " + fmt(worst) + ", " + fmt(secs) + " s"};
}

// ---- 3. reparameterized gradients -----------------------------------------

Outcome criterion_3() {
  const auto t0 = Clock::now();
  Rng rng(303);
  long checked = 0, failed = 0;
  double worst_rel = 0.0;
  bool step_matches = true;
  for (int inst = 0; inst < 5; ++inst) {
    const auto spec = spec_of(inst % 2 ? EmissionKind::Bernoulli : EmissionKind::Gaussian, 4,
                              {3, 2}, {5});
    const int T = 3, S = 2, N = 6;
    Model m = random_model(spec, T, rng);
    Matrix x = random_matrix(N, 4, rng);
    if (spec.emission == EmissionKind::Bernoulli) x = (x.array() > 0).cast<double>();
    const Matrix phi = random_phi(N, T, rng);
    const std::vector<int> rows{0, 2, 3, 5};

    // The step grad_step takes equals alpha times the frozen-noise gradient.
    const Rng noise_seed(1000 + inst);
    Rng replay = noise_seed;
    const FrozenNoise noise = FrozenNoise::draw(4, T, S, spec.latent_dims, replay);
    ModelGrad grad;
    network_gradient(x, rows, phi, m.nets, m.theta, noise, grad);

    Model stepped = m;
    Rng step_rng = noise_seed;
    const double alpha = 1e-3;
    grad_step(x, rows, phi, stepped.nets, stepped.theta, alpha, S, step_rng);
    {
      auto before = param_blocks(m.theta, m.nets);
      auto after = param_blocks(stepped.theta, stepped.nets);
      auto g = param_blocks(grad);
      for (size_t b = 0; b < g.size(); ++b)
        for (size_t i = 0; i < g[b].size(); ++i)
          if (after[b][i] != before[b][i] + alpha * g[b][i]) step_matches = false;
    }

    auto params = param_blocks(m.theta, m.nets);
    auto grads = param_blocks(grad);
    for (size_t b = 0; b < params.size(); ++b) {
      for (size_t i = 0; i < params[b].size(); ++i) {
        double& p = params[b][i];
        const double saved = p, h = 1e-5;
        p = saved + h;
        const double up = network_objective(x, rows, phi, m.nets, m.theta, noise);
        p = saved - h;
        const double down = network_objective(x, rows, phi, m.nets, m.theta, noise);
        p = saved;
        const double fd = (up - down) / (2.0 * h), a = grads[b][i];
        const double err = std::abs(a - fd), scale = std::max(std::abs(a), std::abs(fd));
        ++checked;
        if (err > std::max(kFdRel * scale, kFdAbs)) ++failed;
        if (scale > kFdAbs) worst_rel = std::max(worst_rel, err / scale);
      }
    }
  }
  const double secs = seconds_since(t0);
  return {failed == 0 && step_matches && secs < 30.0,
          std::to_string(failed) + "/" + std::to_string(checked) +
              " entries outside tolerance, worst relative error " + fmt(worst_rel) +
              ", step equals alpha*gradient: " + (step_matches ? "yes" : "no") + ", " +
              fmt(secs) + " s"};
}

// ---- 4. the bound lies below the exact evidence ---------------------------

// ln of int N(h; m, v) p_X(x | h) dh over the real line for a 1-D latent.
double log_marginal_1d(const GenerativeParams& theta, int t, const Vector& x) {
  const double m = theta.clusters[t].top_mean[0], v = theta.clusters[t].top_var[0];
  const double sd = std::sqrt(v);
  auto log_f = [&](double h) {
    Vector hv(1);
    hv[0] = h;
    return -0.5 * (std::log(2.0 * std::numbers::pi * v) + (h - m) * (h - m) / v) +
           theta.clusters[t].emission.log_prob(hv, x);
  };
  const double lo = m - 16.0 * sd, hi = m + 16.0 * sd;
  double peak = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 4000; ++i) peak = std::max(peak, log_f(lo + (hi - lo) * i / 4000.0));
  double total = 0.0;
  const int pieces = 32;
  for (int k = 0; k < pieces; ++k) {
    const double a = lo + (hi - lo) * k / pieces, b = lo + (hi - lo) * (k + 1) / pieces;
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double h) { return std::exp(log_f(h) - peak); }, a, b, 12, 1e-13);
  }
  return peak + std::log(total);
}

// ln p(x_1..N) for T = 2: E_{beta ~ Beta(1, eta)} prod_n (beta a_n + (1 - beta) b_n),
// expanded over subsets and integrated term by term.
double log_evidence_two_clusters(const std::vector<double>& log_a,
                                 const std::vector<double>& log_b, double eta) {
  const int N = static_cast<int>(log_a.size());
  auto log_beta_fn = [](double p, double q) {
    return std::lgamma(p) + std::lgamma(q) - std::lgamma(p + q);
  };
  std::vector<double> terms;
  for (unsigned mask = 0; mask < (1u << N); ++mask) {
    int k = 0;
    double acc = 0.0;
    for (int n = 0; n < N; ++n) {
      if (mask & (1u << n)) {
        ++k;
        acc += log_a[n];
      } else {
        acc += log_b[n];
      }
    }
    terms.push_back(acc + log_beta_fn(1.0 + k, eta + N - k) - log_beta_fn(1.0, eta));
  }
  const double mx = *std::max_element(terms.begin(), terms.end());
  double s = 0.0;
  for (double v : terms) s += std::exp(v - mx);
  return mx + std::log(s);
}

Outcome criterion_4() {
  const auto t0 = Clock::now();
  Rng rng(404);
  const int N = 4, T = 2, S = 10000;
  double worst_margin = std::numeric_limits<double>::infinity();
  double best_gap = std::numeric_limits<double>::infinity();
  for (int inst = 0; inst < 20; ++inst) {
    const auto spec = spec_of(EmissionKind::Gaussian, 2, {1}, {4});
    Model m = random_model(spec, T, rng);
    const Matrix x = random_matrix(N, 2, rng);
    const double eta = std::uniform_real_distribution<double>(0.3, 3.0)(rng);

    VariationalState state{StickPosterior::prior(T, eta), Responsibilities::uniform(N, T), m.nets,
                           eta};
    if (inst % 2 == 0) {
      state.resp.phi = random_phi(N, T, rng);
      state.gamma = update_gamma(random_phi(N, T, rng), eta);
    } else {
      // Tighter: coordinate updates for phi and gamma given the networks.
      for (int sweep = 0; sweep < 3; ++sweep) {
        state.gamma = update_gamma(state.resp.phi, eta);
        update_phi(x, state.gamma, state.nets, m.theta, 200, rng, state.resp);
      }
      state.gamma = update_gamma(state.resp.phi, eta);
    }

    std::vector<double> log_a(N), log_b(N);
    for (int n = 0; n < N; ++n) {
      const Vector xn = x.row(n).transpose();
      log_a[n] = log_marginal_1d(m.theta, 0, xn);
      log_b[n] = log_marginal_1d(m.theta, 1, xn);
    }
    const double log_px = log_evidence_two_clusters(log_a, log_b, eta);
    const double bound = elbo(x, state, m.theta, S, rng);
    worst_margin = std::min(worst_margin, log_px - bound);
    best_gap = std::min(best_gap, log_px - bound);
  }
  const double secs = seconds_since(t0);
  return {worst_margin >= kBoundMargin && secs < 60.0,
          "min (ln p(x) - ELBO) over 20 settings " + fmt(worst_margin) + ", " + fmt(secs) + " s"};
}

// ---- 5. monotone closed-form updates ---------------------------------------

Outcome criterion_5() {
  const auto t0 = Clock::now();
  SyntheticSpec s;
  s.clusters = 3;
  s.n_per_cluster = 60;
  s.latent_dim = 2;
  s.data_dim = 6;
  s.separation = 8.0;
  s.nonlinearity = Nonlinearity::Tanh;
  s.seed = 5;
  const Dataset d = make_synthetic_mixture(s);
  TrainConfig cfg;
  cfg.truncation = 6;
  cfg.alpha = 1e-3;
  cfg.epochs = 2;
  cfg.seed = 55;
  Trainer trainer(d.x, {}, spec_of(EmissionKind::Gaussian, 6, {2}, {8}), cfg);

  double worst = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < 10; ++iter) {
    const Rng noise(9000 + iter);
    auto bound = [&] {
      Rng r = noise;
      return elbo(trainer.data(), trainer.state(), trainer.theta(), 1, r);
    };
    const double e0 = bound();
    trainer.update_sticks();
    const double e1 = bound();
    trainer.update_top_layer();
    const double e2 = bound();
    worst = std::min({worst, e1 - e0, e2 - e1});
    trainer.run_gradient_epochs();
    trainer.update_responsibilities();
  }
  const double secs = seconds_since(t0);
  return {worst >= -kMonotoneSlack && secs < 60.0,
          "smallest ELBO change across gamma and (m, V) updates " + fmt(worst) + ", " +
              fmt(secs) + " s"};
}

// ---- 6 and 7. clustering on synthetic mixtures ----------------------------

SyntheticSpec mixture(double separation, std::uint64_t seed) {
  SyntheticSpec s;
  s.clusters = 3;
  s.n_per_cluster = 300;
  s.latent_dim = 2;
  s.data_dim = 10;
  s.separation = separation;
  s.nonlinearity = Nonlinearity::Tanh;
  s.noise_scale = 0.1;
  s.seed = seed;
  return s;
}

TrainConfig clustering_config(double alpha, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.truncation = 10;
  cfg.eta = 1.0;
  cfg.alpha = alpha;
  cfg.epochs = 5;
  cfg.batch_size = 50;
  cfg.max_outer_iters = 100;
  cfg.elbo_rel_tol = 1e-5;
  cfg.seed = seed;
  return cfg;
}

ModelSpec cluster_spec(int hidden) { return spec_of(EmissionKind::Gaussian, 10, {2}, {hidden}); }

Outcome criterion_6() {
  const auto t0 = Clock::now();
  const Dataset d = make_synthetic_mixture(mixture(12.0, 606));
  const TrainResult r = train(d.x, {}, cluster_spec(16), clustering_config(1e-3, 6));
  const auto hard = hard_assignments(r.state.resp.phi);
  const double ari = adjusted_rand_index(hard, d.labels);
  const Vector mass = cluster_mass(r.state.resp.phi);
  const int big = static_cast<int>((mass.array() > d.size() / 20.0).count());
  const double secs = seconds_since(t0);
  return {ari >= kMinAri && big >= 3 && big <= 6 && secs < 300.0,
          "ARI " + fmt(ari) + ", clusters with N_t > N/20: " + std::to_string(big) + ", " +
              std::to_string(r.trace.size()) + " iterations, " + fmt(secs) + " s"};
}

std::vector<int> predict_labels(const TrainResult& r, const Matrix& x, int samples,
                                std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> out;
  for (Eigen::Index n = 0; n < x.rows(); ++n) {
    const Vector p = predict_cluster(x.row(n).transpose(), r.state, r.theta, samples, rng);
    Eigen::Index best;
    p.maxCoeff(&best);
    out.push_back(static_cast<int>(best));
  }
  return out;
}

Outcome criterion_7() {
  const auto t0 = Clock::now();
  const Dataset d = make_synthetic_mixture(mixture(5.0, 707));
  const Split parts = split(d, {0.8, 0.0, 0.2}, 17);
  const Dataset labeled = mask_labels(parts.train, 0.1, 18);

  const TrainResult semi = train(labeled.x, labeled.labels, cluster_spec(32), clustering_config(3e-3, 7));
  const auto semi_pred = predict_labels(semi, parts.test.x, 100, 71);
  const double semi_acc = accuracy(semi_pred, parts.test.labels);

  const TrainResult unsup = train(parts.train.x, {}, cluster_spec(32), clustering_config(3e-3, 7));
  const auto unsup_pred = predict_labels(unsup, parts.test.x, 100, 71);
  const double unsup_acc = matched_accuracy(unsup_pred, parts.test.labels);

  const double secs = seconds_since(t0);
  return {semi_acc >= kMinSemiAccuracy && semi_acc - unsup_acc >= kMinSemiGain && secs < 300.0,
          "semi-supervised held-out accuracy " + fmt(semi_acc) + ", unsupervised matched " +
              fmt(unsup_acc) + ", " + fmt(secs) + " s"};
}

// ---- 8. stochastic updates -------------------------------------------------

Outcome criterion_8() {
  const auto t0 = Clock::now();
  Rng rng(808);
  const int N = 12, B = N / 4, T = 4;
  const auto spec = spec_of(EmissionKind::Gaussian, 3, {2, 2}, {4});
  Model m = random_model(spec, T, rng);
  const Matrix x = random_matrix(N, 3, rng);
  const double eta = 1.5;
  VariationalState state{StickPosterior::prior(T, eta), Responsibilities::uniform(N, T), m.nets,
                         eta};
  state.resp.phi = random_phi(N, T, rng);
  state.gamma = update_gamma(random_phi(N, T, rng), eta);

  GenerativeParams batch_theta = m.theta;
  const StickPosterior batch_gamma = update_gamma(state.resp.phi, eta);
  update_top_prior(state.resp.phi, state.nets, x, batch_theta);

  // Full batch with rho = 1.
  bool exact = true;
  {
    VariationalState s1 = state;
    GenerativeParams th = m.theta;
    svi_step(x, all_rows(N), s1, th, 1.0);
    exact = s1.gamma.gamma1 == batch_gamma.gamma1 && s1.gamma.gamma2 == batch_gamma.gamma2;
    for (int t = 0; t < T; ++t)
      exact = exact && th.clusters[t].top_mean == batch_theta.clusters[t].top_mean &&
              th.clusters[t].top_var == batch_theta.clusters[t].top_var;
  }

  // Quarter batches in a fixed cycle.
  const long steps = 1200000;
  const auto rows = all_rows(N);
  for (long step = 1; step <= steps; ++step) {
    const int b = static_cast<int>((step - 1) % 4);
    const std::vector<int> batch(rows.begin() + B * b, rows.begin() + B * (b + 1));
    svi_step(x, batch, state, m.theta, rho_schedule(step, 1.0, 0.75));
  }
  double worst = 0.0;
  for (int t = 0; t < T - 1; ++t) {
    worst = std::max(worst, std::abs(state.gamma.gamma1[t] - batch_gamma.gamma1[t]));
    worst = std::max(worst, std::abs(state.gamma.gamma2[t] - batch_gamma.gamma2[t]));
  }
  for (int t = 0; t < T; ++t) {
    worst = std::max(worst, (m.theta.clusters[t].top_mean - batch_theta.clusters[t].top_mean)
                                .cwiseAbs().maxCoeff());
    worst = std::max(worst, (m.theta.clusters[t].top_var - batch_theta.clusters[t].top_var)
                                .cwiseAbs().maxCoeff());
  }
  const double secs = seconds_since(t0);
  return {exact && worst <= kSviTol && secs < 60.0,
          std::string("B = N, rho = 1 bit-exact: ") + (exact ? "yes" : "no") +
              "; max |error| after " + std::to_string(steps) + " quarter-batch steps " +
              fmt(worst) + ", " + fmt(secs) + " s"};
}

// ---- 9. predictive distribution --------------------------------------------

Outcome criterion_9() {
  const auto t0 = Clock::now();
  Rng rng(909);
  const int T = 5;
  const auto spec = spec_of(EmissionKind::Gaussian, 4, {3, 2}, {6});
  Model m = random_model(spec, T, rng);
  VariationalState state{update_gamma(random_phi(30, T, rng), 1.0),
                         Responsibilities::uniform(1, T), m.nets, 1.0};
  double worst_sum = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vector x = random_matrix(4, 1, rng) * 3.0;
    const Vector p = predict_cluster(x, state, m.theta, 20, rng);
    worst_sum = std::max(worst_sum, std::abs(p.sum() - 1.0));
  }

  // Identical clusters with equal expected weights: E[beta_t] = 1 / (T - t).
  for (int t = 1; t < T; ++t) {
    m.theta.clusters[t] = m.theta.clusters[0];
    state.nets.heads[t] = state.nets.heads[0];
  }
  Vector g1 = Vector::Ones(T - 1), g2(T - 1);
  for (int t = 0; t < T - 1; ++t) g2[t] = T - t - 1;
  state.gamma = StickPosterior(g1, g2);
  double worst_uniform = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vector x = random_matrix(4, 1, rng) * 3.0;
    const Vector p = predict_cluster(x, state, m.theta, 20, rng);
    worst_uniform = std::max(worst_uniform, (p.array() - 1.0 / T).abs().maxCoeff());
  }
  const double secs = seconds_since(t0);
  return {worst_sum <= kSumTol && worst_uniform <= kUniformTol,
          "max |sum - 1| " + fmt(worst_sum) + ", max deviation from uniform " +
              fmt(worst_uniform) + ", " + fmt(secs) + " s"};
}

// ---- 10. checkpoints and determinism ---------------------------------------

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Trace text without the wall-clock column.
std::string trace_without_seconds(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + '\n';
  return out;
}

Outcome criterion_10() {
  const auto t0 = Clock::now();
  const auto root = std::filesystem::temp_directory_path() /
                    ("dpdlgmm_acceptance_" + std::to_string(std::random_device{}()));
  const std::string config =
      "data_source = synthetic\nsynth_clusters = 3\nsynth_n_per_cluster = 50\n"
      "synth_data_dim = 5\nsynth_separation = 10\nsynth_seed = 3\n"
      "truncation = 6\nalpha = 0.001\nepochs = 2\nmax_outer_iters = 8\n"
      "layer_dims = 2, 2\nhidden = 8\nseed = 42\n";
  bool ok = true;
  std::string why;
  for (const char* run : {"a", "b"}) {
    std::filesystem::create_directories(root / run);
    std::ofstream(root / run / "run.cfg") << config;
    if (cli::cmd_train(root / run / "run.cfg") != cli::kExitOk) {
      ok = false;
      why = "training failed";
    }
  }
  bool same_trace = false, round_trip = false;
  if (ok) {
    const std::string ta = trace_without_seconds(root / "a" / "trace.csv");
    same_trace = !ta.empty() && ta == trace_without_seconds(root / "b" / "trace.csv");
    const auto ckpt = cli::load_checkpoint(root / "a" / "checkpoint.bin");
    cli::save_checkpoint(root / "a" / "resaved.bin", ckpt);
    round_trip = read_file(root / "a" / "checkpoint.bin") == read_file(root / "a" / "resaved.bin");
  }
  std::error_code ec;
  std::filesystem::remove_all(root, ec);
  const double secs = seconds_since(t0);
  return {ok && same_trace && round_trip,
          why.empty() ? std::string("identical traces: ") + (same_trace ? "yes" : "no") +
                            ", checkpoint round trip bit-exact: " + (round_trip ? "yes" : "no") +
                            ", " + fmt(secs) + " s"
                      : why};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{
      criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
      criterion_6, criterion_7, criterion_8, criterion_9, criterion_10};
  std::vector<int> chosen;
  if (argc > 1) {
    for (int i = 1; i < argc; ++i) {
      const int k = std::atoi(argv[i]);
      if (k < 1 || k > 10) {
        std::cerr << "usage: acceptance [1-10 ...]\n";
        return 2;
      }
      chosen.push_back(k);
    }
  } else {
    for (int k = 1; k <= 10; ++k) chosen.push_back(k);
  }
  int failures = 0;
  for (int k : chosen) {
    Outcome o;
    try {
      o = criteria[k - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << k << ": " << o.detail
              << std::endl;
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
