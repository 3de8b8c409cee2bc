#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dpdlgmm/gradients.hpp"
#include "fd_check.hpp"
#include "toy.hpp"

using namespace dpdlgmm;
using dpdlgmm::testing::random_matrix;
using dpdlgmm::testing::random_phi;
using dpdlgmm::testing::randomize;
using dpdlgmm::testing::random_toy;
using dpdlgmm::testing::spec_of;
using dpdlgmm::testing::Toy;

namespace {

std::vector<double> flatten(const std::vector<std::span<double>>& blocks) {
  std::vector<double> out;
  for (auto b : blocks) out.insert(out.end(), b.begin(), b.end());
  return out;
}

Matrix data_for(const ModelSpec& spec, int n, Rng& rng) {
  Matrix x = random_matrix(n, spec.data_dim, rng);
  if (spec.emission == EmissionKind::Bernoulli) x = (x.array() > 0).cast<double>();
  return x;
}

}  // namespace

TEST(FrozenNoise, LayoutFollowsDrawOrder) {
  const std::vector<int> dims{3, 2};
  Rng a(1), b(1);
  const auto noise = FrozenNoise::draw(2, 3, 2, dims, a);
  for (int i = 0; i < 2; ++i)
    for (int t = 0; t < 3; ++t)
      for (int s = 0; s < 2; ++s) {
        const auto want = draw_standard_stack(dims, b);
        EXPECT_EQ(noise.at(i, t, s), want);
      }
  EXPECT_EQ(a(), b());
}

TEST(NetworkObjective, MatchesStraightLineSum) {
  Rng rng(2);
  const auto spec = spec_of(EmissionKind::Gaussian, 3, {2, 2}, {4});
  const int T = 3, S = 2;
  Toy toy = random_toy(spec, T, rng);
  const Matrix x = data_for(spec, 6, rng);
  const Matrix phi = random_phi(6, T, rng);
  const std::vector<int> rows{4, 1, 3};
  const auto noise = FrozenNoise::draw(3, T, S, spec.latent_dims, rng);

  double want = 0.0;
  for (size_t i = 0; i < rows.size(); ++i) {
    const Vector xn = x.row(rows[i]).transpose();
    for (int t = 0; t < T; ++t) {
      const auto q = toy.nets.recognize(t, xn);
      double v = expected_top_log_prob(toy.theta, t, q.back());
      for (const auto& g : q) v += gaussian_entropy_diag(g.var);
      for (int s = 0; s < S; ++s) {
        LatentStack h;
        for (size_t k = 0; k < q.size(); ++k)
          h.push_back(q[k].mean + (q[k].var.array().sqrt() *
                                   noise.at(static_cast<int>(i), t, s)[k].array()).matrix());
        v += conditional_log_prob(toy.theta, t, xn, h) / S;
      }
      want += phi(rows[i], t) * v;
    }
  }
  want /= 3.0;
  EXPECT_NEAR(network_objective(x, rows, phi, toy.nets, toy.theta, noise), want, 1e-11);
}

TEST(NetworkGradient, FiniteDifferencesAllParameters) {
  Rng rng(3);
  const std::vector<ModelSpec> specs{
      spec_of(EmissionKind::Gaussian, 3, {2}, {4}),
      spec_of(EmissionKind::Bernoulli, 4, {3, 2}, {3}),
      spec_of(EmissionKind::Gaussian, 2, {2, 2, 1}, {3, 2}),
  };
  for (const auto& spec : specs) {
    const int T = 2, S = 2;
    Toy toy = random_toy(spec, T, rng);
    const Matrix x = data_for(spec, 4, rng);
    const Matrix phi = random_phi(4, T, rng);
    const std::vector<int> rows{0, 2, 3};
    const auto noise = FrozenNoise::draw(3, T, S, spec.latent_dims, rng);
    ModelGrad grad;
    const double value = network_gradient(x, rows, phi, toy.nets, toy.theta, noise, grad);
    EXPECT_EQ(value, network_objective(x, rows, phi, toy.nets, toy.theta, noise));
    auto objective = [&] { return network_objective(x, rows, phi, toy.nets, toy.theta, noise); };
    const auto stats = dpdlgmm::testing::compare_fd(param_blocks(toy.theta, toy.nets), param_blocks(grad),
                                           objective, 1e-5, 1e-4, 1e-7);
    EXPECT_EQ(stats.failed, 0);
    EXPECT_GT(stats.checked, 50);
  }
}

TEST(NetworkObjective, AveragesOverBatch) {
  Rng rng(4);
  const auto spec = spec_of(EmissionKind::Gaussian, 2, {2}, {3});
  Toy toy = random_toy(spec, 2, rng);
  const Matrix x = data_for(spec, 3, rng);
  const Matrix phi = random_phi(3, 2, rng);
  Rng a(5), b(5);
  const auto both = FrozenNoise::draw(2, 2, 3, spec.latent_dims, a);
  const auto first = FrozenNoise::draw(1, 2, 3, spec.latent_dims, b);
  const auto second = FrozenNoise::draw(1, 2, 3, spec.latent_dims, b);
  const std::vector<int> pair{1, 2}, r1{1}, r2{2};
  const double v = network_objective(x, pair, phi, toy.nets, toy.theta, both);
  const double v1 = network_objective(x, r1, phi, toy.nets, toy.theta, first);
  const double v2 = network_objective(x, r2, phi, toy.nets, toy.theta, second);
  EXPECT_NEAR(v, 0.5 * (v1 + v2), 1e-12 * (1.0 + std::abs(v)));
}

TEST(GradStep, ZeroResponsibilityLeavesClusterAlone) {
  Rng rng(6);
  const auto spec = spec_of(EmissionKind::Gaussian, 3, {2, 2}, {4});
  const int T = 3;
  Toy toy = random_toy(spec, T, rng);
  const Matrix x = data_for(spec, 5, rng);
  Matrix phi = random_phi(5, T, rng);
  phi.col(0) += phi.col(1);
  phi.col(1).setZero();
  phi(2, 1) = 1e-9;  // below the skip threshold
  phi(2, 0) -= 1e-9;
  const std::vector<int> rows{0, 1, 2, 3, 4};
  const auto gen1 = flatten(param_blocks(toy.theta.clusters[1]));
  std::vector<double> heads1;
  for (auto& h : toy.nets.heads[1]) {
    const auto f = flatten(param_blocks(h));
    heads1.insert(heads1.end(), f.begin(), f.end());
  }
  const auto gen0 = flatten(param_blocks(toy.theta.clusters[0]));
  grad_step(x, rows, phi, toy.nets, toy.theta, 0.05, 2, rng);
  EXPECT_EQ(flatten(param_blocks(toy.theta.clusters[1])), gen1);
  std::vector<double> after1;
  for (auto& h : toy.nets.heads[1]) {
    const auto f = flatten(param_blocks(h));
    after1.insert(after1.end(), f.begin(), f.end());
  }
  EXPECT_EQ(after1, heads1);
  EXPECT_NE(flatten(param_blocks(toy.theta.clusters[0])), gen0);
}

TEST(GradStep, ZeroStepSizeIsNoOp) {
  Rng rng(7);
  const auto spec = spec_of(EmissionKind::Bernoulli, 4, {2}, {3});
  Toy toy = random_toy(spec, 2, rng);
  const Matrix x = data_for(spec, 4, rng);
  const Matrix phi = random_phi(4, 2, rng);
  const auto before = flatten(param_blocks(toy.theta, toy.nets));
  const std::vector<int> rows{0, 1, 2, 3};
  grad_step(x, rows, phi, toy.nets, toy.theta, 0.0, 1, rng);
  EXPECT_EQ(flatten(param_blocks(toy.theta, toy.nets)), before);
}

TEST(GradStep, SmallStepIncreasesFrozenObjective) {
  Rng rng(8);
  const auto spec = spec_of(EmissionKind::Gaussian, 3, {2}, {4});
  Toy toy = random_toy(spec, 2, rng);
  const Matrix x = data_for(spec, 6, rng);
  const Matrix phi = random_phi(6, 2, rng);
  const std::vector<int> rows{0, 1, 2, 3, 4, 5};
  Rng noise_rng(9);
  Rng copy = noise_rng;
  const auto noise = FrozenNoise::draw(6, 2, 1, spec.latent_dims, copy);
  const double before = network_objective(x, rows, phi, toy.nets, toy.theta, noise);
  const double reported = grad_step(x, rows, phi, toy.nets, toy.theta, 1e-3, 1, noise_rng);
  EXPECT_EQ(reported, before);
  EXPECT_GT(network_objective(x, rows, phi, toy.nets, toy.theta, noise), before);
}

TEST(GradStep, RejectsBadBatches) {
  Rng rng(10);
  const auto spec = spec_of(EmissionKind::Gaussian, 2, {1}, {2});
  Toy toy = random_toy(spec, 2, rng);
  const Matrix x = data_for(spec, 3, rng);
  const Matrix phi = random_phi(3, 2, rng);
  const std::vector<int> none, outside{0, 3};
  EXPECT_THROW(grad_step(x, none, phi, toy.nets, toy.theta, 0.1, 1, rng), std::invalid_argument);
  EXPECT_THROW(grad_step(x, outside, phi, toy.nets, toy.theta, 0.1, 1, rng), std::out_of_range);
}

TEST(GradStep, Deterministic) {
  auto run = [] {
    Rng rng(11);
    const auto spec = spec_of(EmissionKind::Gaussian, 3, {2, 1}, {3});
    Toy toy = random_toy(spec, 3, rng);
    const Matrix x = data_for(spec, 5, rng);
    const Matrix phi = random_phi(5, 3, rng);
    const std::vector<int> rows{4, 0, 2};
    for (int i = 0; i < 3; ++i) grad_step(x, rows, phi, toy.nets, toy.theta, 0.01, 2, rng);
    return flatten(param_blocks(toy.theta, toy.nets));
  };
  EXPECT_EQ(run(), run());
}
