#include <benchmark/benchmark.h>

#include <numeric>
#include <random>
#include <vector>

#include "dpdlgmm/gradients.hpp"
#include "dpdlgmm/nets.hpp"
#include "dpdlgmm/special_math.hpp"
#include "dpdlgmm/variational.hpp"

namespace {

using namespace dpdlgmm;

ModelSpec mnist_like_spec() {
  ModelSpec s;
  s.emission = EmissionKind::Bernoulli;
  s.data_dim = 784;
  s.latent_dims = {50, 20};
  s.hidden = {200};
  return s;
}

ModelSpec small_spec() {
  ModelSpec s;
  s.emission = EmissionKind::Gaussian;
  s.data_dim = 10;
  s.latent_dims = {2};
  s.hidden = {16};
  return s;
}

Matrix random_data(int n, int d, bool binary, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix x(n, d);
  for (auto& v : x.reshaped()) v = binary ? (g(rng) > 0.5 ? 1.0 : 0.0) : g(rng);
  return x;
}

Matrix uniform_phi(int n, int t) { return Matrix::Constant(n, t, 1.0 / t); }

void BM_Digamma(benchmark::State& state) {
  double x = 0.37, acc = 0.0;
  for (auto _ : state) {
    acc += digamma(x);
    x = x < 50.0 ? x + 0.173 : 0.37;
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_Digamma);

void BM_HeadForwardBackward(benchmark::State& state) {
  Rng rng(1);
  const std::vector<int> hidden{static_cast<int>(state.range(1))};
  const int in = static_cast<int>(state.range(0));
  const auto head = nn::GaussianHead::make(in, hidden, 50, rng);
  auto grad = nn::GaussianHeadGrad::zeros_like(head);
  const Vector x = Vector::Random(in);
  const Vector gm = Vector::Ones(50), gv = Vector::Ones(50);
  for (auto _ : state) {
    nn::HeadCache cache;
    const auto out = nn::head_forward(head, x, &cache);
    benchmark::DoNotOptimize(out.mean.data());
    benchmark::DoNotOptimize(nn::head_backward(head, cache, gm, gv, grad).data());
  }
}
BENCHMARK(BM_HeadForwardBackward)->Args({10, 16})->Args({784, 200});

void BM_UpdatePhi(benchmark::State& state) {
  Rng rng(2);
  const int n = 100, T = static_cast<int>(state.range(0));
  const auto spec = small_spec();
  const auto theta = make_generative(spec, T, rng);
  const auto nets = make_inference_nets(spec, T, rng);
  const Matrix x = random_data(n, spec.data_dim, false, rng);
  const auto gamma = StickPosterior::prior(T, 1.0);
  auto resp = Responsibilities::uniform(n, T);
  for (auto _ : state) update_phi(x, gamma, nets, theta, 1, rng, resp);
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_UpdatePhi)->Arg(5)->Arg(20);

void BM_GradStep(benchmark::State& state) {
  Rng rng(3);
  const bool large = state.range(0) != 0;
  const auto spec = large ? mnist_like_spec() : small_spec();
  const int n = 100, T = 5;
  auto theta = make_generative(spec, T, rng);
  auto nets = make_inference_nets(spec, T, rng);
  const Matrix x = random_data(n, spec.data_dim, large, rng);
  const Matrix phi = uniform_phi(n, T);
  std::vector<int> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  for (auto _ : state)
    benchmark::DoNotOptimize(grad_step(x, rows, phi, nets, theta, 1e-6, 1, rng));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_GradStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
