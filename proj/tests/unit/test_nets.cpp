#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dpdlgmm/nets.hpp"
#include "fd_check.hpp"

using namespace dpdlgmm;
using namespace dpdlgmm::nn;

namespace {

Vector random_vector(int n, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Vector v(n);
  for (auto& e : v) e = d(rng);
  return v;
}

void randomize(Mlp& net, Rng& rng) {
  std::normal_distribution<double> d(0.0, 0.5);
  for (auto& layer : net.layers()) {
    for (auto& w : layer.weights.reshaped()) w = d(rng);
    for (auto& b : layer.bias) b = d(rng);
  }
}

// Straight-line evaluation without caches, used as an oracle.
Vector reference_forward(const Mlp& net, Vector x) {
  for (const auto& layer : net.layers()) {
    Vector z = layer.bias;
    for (int i = 0; i < layer.out_dim(); ++i)
      for (int j = 0; j < layer.in_dim(); ++j) z[i] += layer.weights(i, j) * x[j];
    if (layer.activation == Activation::Tanh)
      for (auto& e : z) e = std::tanh(e);
    x = z;
  }
  return x;
}

}  // namespace

TEST(Forward, IdentityLayer) {
  DenseLayer layer{Matrix::Identity(3, 3), Vector::Zero(3), Activation::Identity};
  const Mlp net({layer});
  Vector x(3);
  x << 1.5, -2.0, 0.25;
  EXPECT_EQ(forward(net, x), x);
}

TEST(Forward, ZeroTanhLayer) {
  const Mlp net({DenseLayer{Matrix::Zero(2, 4), Vector::Zero(2), Activation::Tanh}});
  EXPECT_EQ(forward(net, Vector::Constant(4, 3.0)), Vector::Zero(2));
}

TEST(Forward, EmptyStackIsIdentity) {
  const Mlp net(3);
  const Vector x = Vector::LinSpaced(3, -1, 1);
  EXPECT_EQ(forward(net, x), x);
}

TEST(Forward, MatchesReferenceEvaluation) {
  Rng rng(42);
  const int hidden[] = {6};
  Mlp net = Mlp::make(4, hidden, 3, Activation::Identity, rng);
  randomize(net, rng);
  const Vector x = random_vector(4, rng);
  const Vector y = forward(net, x);
  const Vector want = reference_forward(net, x);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(y[i], want[i], 1e-14);
}

TEST(Forward, RejectsDimensionMismatch) {
  Rng rng(1);
  const Mlp net = Mlp::make(3, {}, 2, Activation::Tanh, rng);
  EXPECT_THROW(forward(net, Vector::Zero(4)), std::invalid_argument);
}

TEST(Mlp, RejectsBrokenChain) {
  Rng rng(1);
  auto a = DenseLayer::make(3, 4, Activation::Tanh, rng);
  auto b = DenseLayer::make(5, 2, Activation::Identity, rng);
  EXPECT_THROW(Mlp({a, b}), std::invalid_argument);
}

TEST(Init, GlorotUniformBounds) {
  Rng rng(2);
  const auto layer = DenseLayer::make(30, 20, Activation::Tanh, rng);
  const double bound = std::sqrt(6.0 / 50.0);
  EXPECT_LE(layer.weights.cwiseAbs().maxCoeff(), bound);
  EXPECT_GT(layer.weights.cwiseAbs().maxCoeff(), 0.8 * bound);
  EXPECT_EQ(layer.bias, Vector::Zero(20));
}

TEST(Backward, IdentityLayerTransposes) {
  Rng rng(3);
  const Mlp net({DenseLayer::make(4, 3, Activation::Identity, rng)});
  MlpCache cache;
  forward(net, random_vector(4, rng), &cache);
  MlpGrad grads = MlpGrad::zeros_like(net);
  const Vector g = random_vector(3, rng);
  const Vector gin = backward(net, cache, g, grads);
  const Vector want = net.layers()[0].weights.transpose() * g;
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(gin[i], want[i], 1e-15);
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
  Rng rng(4);
  const int hidden[] = {5, 5};
  const Mlp net = Mlp::make(3, hidden, 2, Activation::Tanh, rng);
  MlpCache cache;
  forward(net, random_vector(3, rng), &cache);
  MlpGrad grads = MlpGrad::zeros_like(net);
  const Vector gin = backward(net, cache, Vector::Zero(2), grads);
  EXPECT_EQ(gin, Vector::Zero(3));
  for (auto block : param_blocks(grads))
    for (double v : block) EXPECT_EQ(v, 0.0);
}

TEST(Backward, RejectsStaleCache) {
  Rng rng(5);
  const Mlp a = Mlp::make(3, {}, 2, Activation::Tanh, rng);
  const int hidden[] = {4};
  const Mlp b = Mlp::make(3, hidden, 2, Activation::Tanh, rng);
  MlpCache cache;
  forward(a, Vector::Zero(3), &cache);
  MlpGrad grads = MlpGrad::zeros_like(b);
  EXPECT_THROW(backward(b, cache, Vector::Zero(2), grads), std::invalid_argument);
}

TEST(Backward, FiniteDifferencesOnRandomNets) {
  Rng rng(6);
  for (int rep = 0; rep < 10; ++rep) {
    const int in = 2 + rep % 3, out = 1 + rep % 4;
    std::vector<int> hidden(static_cast<size_t>(rep % 3), 5);
    Mlp net = Mlp::make(in, hidden, out, rep % 2 ? Activation::Tanh : Activation::Identity, rng);
    randomize(net, rng);
    const Vector x = random_vector(in, rng);
    const Vector w = random_vector(out, rng);  // loss = w . net(x)

    MlpCache cache;
    forward(net, x, &cache);
    MlpGrad grads = MlpGrad::zeros_like(net);
    const Vector gin = backward(net, cache, w, grads);

    auto loss = [&] { return w.dot(forward(net, x)); };
    const auto stats = dpdlgmm::testing::compare_fd(param_blocks(net), param_blocks(grads), loss);
    EXPECT_EQ(stats.failed, 0);

    Vector xv = x;
    auto loss_x = [&] { return w.dot(forward(net, xv)); };
    Vector gin_copy = gin;
    dpdlgmm::testing::compare_fd({as_span(xv)}, {as_span(gin_copy)}, loss_x);
  }
}

TEST(Backward, ScaleAppliesToParametersOnly) {
  Rng rng(7);
  const int hidden[] = {3};
  const Mlp net = Mlp::make(2, hidden, 2, Activation::Tanh, rng);
  MlpCache cache;
  forward(net, random_vector(2, rng), &cache);
  const Vector g = random_vector(2, rng);
  MlpGrad one = MlpGrad::zeros_like(net), three = MlpGrad::zeros_like(net);
  const Vector gin1 = backward(net, cache, g, one, 1.0);
  const Vector gin3 = backward(net, cache, g, three, 3.0);
  EXPECT_EQ(gin1, gin3);
  const auto a = param_blocks(one), b = param_blocks(three);
  for (size_t k = 0; k < a.size(); ++k)
    for (size_t i = 0; i < a[k].size(); ++i) EXPECT_NEAR(b[k][i], 3.0 * a[k][i], 1e-15);
}

TEST(Backward, Deterministic) {
  auto run = [] {
    Rng rng(8);
    const int hidden[] = {4, 4};
    const Mlp net = Mlp::make(3, hidden, 2, Activation::Tanh, rng);
    MlpCache cache;
    forward(net, random_vector(3, rng), &cache);
    MlpGrad grads = MlpGrad::zeros_like(net);
    backward(net, cache, random_vector(2, rng), grads);
    std::vector<double> flat;
    for (auto b : param_blocks(grads)) flat.insert(flat.end(), b.begin(), b.end());
    return flat;
  };
  EXPECT_EQ(run(), run());
}

TEST(GaussianHead, ZeroRawGivesLn2Squared) {
  Rng rng(9);
  const int hidden[] = {4};
  GaussianHead head = GaussianHead::make(3, hidden, 2, rng);
  head.raw_var_out.weights.setZero();
  head.raw_var_out.bias.setZero();
  const auto g = head_forward(head, random_vector(3, rng));
  for (double v : g.var) EXPECT_NEAR(v, std::log(2.0) * std::log(2.0), 1e-15);
}

TEST(GaussianHead, VarianceFloor) {
  Rng rng(10);
  GaussianHead head = GaussianHead::make(3, {}, 2, rng);
  head.raw_var_out.weights.setZero();
  head.raw_var_out.bias.setConstant(-1e3);
  const auto g = head_forward(head, random_vector(3, rng));
  for (double v : g.var) EXPECT_EQ(v, kVarianceFloor);

  // Never below the floor, whatever the weights.
  std::normal_distribution<double> big(0.0, 50.0);
  for (auto& w : head.raw_var_out.weights.reshaped()) w = big(rng);
  for (int rep = 0; rep < 100; ++rep) {
    const auto h = head_forward(head, random_vector(3, rng, 5.0));
    EXPECT_GE(h.var.minCoeff(), kVarianceFloor);
  }
}

TEST(GaussianHead, FiniteDifferences) {
  Rng rng(11);
  for (int rep = 0; rep < 5; ++rep) {
    const int hidden[] = {5};
    GaussianHead head = GaussianHead::make(3, hidden, 2, rng);
    for (auto b : param_blocks(head)) {
      std::normal_distribution<double> d(0.0, 0.5);
      for (double& v : b) v = d(rng);
    }
    const Vector x = random_vector(3, rng);
    const Vector a = random_vector(2, rng), c = random_vector(2, rng);
    // Scalar test function of (mean, var): a.mean + c.log(var) + sum mean^2 var.
    auto loss = [&] {
      const auto g = head_forward(head, x);
      return a.dot(g.mean) + c.dot(g.var.array().log().matrix()) +
             (g.mean.array().square() * g.var.array()).sum();
    };
    HeadCache cache;
    const auto g = head_forward(head, x, &cache);
    const Vector d_mean = a + 2.0 * (g.mean.array() * g.var.array()).matrix();
    const Vector d_var = (c.array() / g.var.array() + g.mean.array().square()).matrix();
    GaussianHeadGrad grads = GaussianHeadGrad::zeros_like(head);
    head_backward(head, cache, d_mean, d_var, grads);
    const auto stats = dpdlgmm::testing::compare_fd(param_blocks(head), param_blocks(grads), loss);
    EXPECT_EQ(stats.failed, 0);
  }
}

TEST(SgdStep, Examples) {
  Vector p(1), g(1);
  p << 1.0;
  g << 2.0;
  std::vector<std::span<double>> ps{as_span(p)}, gs{as_span(g)};
  sgd_step(ps, gs, 0.1);
  EXPECT_NEAR(p[0], 1.2, 1e-15);

  const Vector before = p;
  sgd_step(ps, gs, 0.0);
  EXPECT_EQ(p, before);
  g.setZero();
  sgd_step(ps, gs, 0.5);
  EXPECT_EQ(p, before);
}

TEST(SgdStep, ShapeMismatch) {
  Vector p(2), g(3);
  std::vector<std::span<double>> ps{as_span(p)}, gs{as_span(g)};
  EXPECT_THROW(sgd_step(ps, gs, 0.1), std::invalid_argument);
  std::vector<std::span<double>> none;
  EXPECT_THROW(sgd_step(ps, none, 0.1), std::invalid_argument);
}

TEST(SgdStep, AscendsLinearObjectiveOnNet) {
  Rng rng(12);
  const int hidden[] = {3};
  Mlp net = Mlp::make(2, hidden, 1, Activation::Identity, rng);
  const Vector x = random_vector(2, rng);
  MlpCache cache;
  const double before = forward(net, x, &cache)[0];
  MlpGrad grads = MlpGrad::zeros_like(net);
  backward(net, cache, Vector::Ones(1), grads);
  sgd_step(net, grads, 1e-3);
  EXPECT_GT(forward(net, x)[0], before);
}
