#include <cmath>
#include <vector>

#include "doctest.h"
#include "gradcheck.hpp"
#include "gradient_suite.hpp"
#include "oracles.hpp"
#include "ntfa/diff/adam.hpp"
#include "ntfa/diff/ops.hpp"
#include "ntfa/error.hpp"

using namespace ntfa;
using namespace ntfa::diff;
using ntfa::testing::gradcheck;
using ntfa::testing::random_tensor;

using ntfa::testing::naive_matmul;

TEST_SUITE("diffcore") {

TEST_CASE("matmul by the identity returns the right operand") {
  Rng rng(1);
  Graph g;
  Tensor b = random_tensor({3, 4}, rng);
  Tensor eye({3, 3}, 0.0);
  for (std::size_t i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
  Var c = matmul(g.constant(eye), g.constant(b));
  CHECK(c.value() == b);
}

TEST_CASE("matmul of 1x1 matrices") {
  Graph g;
  Var c = matmul(g.constant(Tensor::matrix({{2.0}})), g.constant(Tensor::matrix({{3.0}})));
  CHECK(c.value().shape() == Shape{1, 1});
  CHECK(c.item() == 6.0);
}

TEST_CASE("matmul matches a triple-loop oracle on random 4x5 by 5x3") {
  Rng rng(2);
  for (int instance = 0; instance < 100; ++instance) {
    Graph g;
    Tensor a = random_tensor({4, 5}, rng);
    Tensor b = random_tensor({5, 3}, rng);
    Tensor expected = naive_matmul(a, b);
    Tensor got = matmul(g.constant(a), g.constant(b)).value();
    REQUIRE(got.shape() == expected.shape());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-12));
  }
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
  Graph g;
  CHECK_THROWS_AS(matmul(g.constant(Tensor({2, 3}, 1.0)), g.constant(Tensor({2, 3}, 1.0))),
                  DimensionError);
}

TEST_CASE("prelu forward values") {
  Graph g;
  Var slope = g.constant(Tensor::scalar(0.25));
  CHECK(prelu(g.constant(Tensor::scalar(2.0)), slope).item() == 2.0);
  CHECK(prelu(g.constant(Tensor::scalar(-2.0)), slope).item() == -0.5);
}

TEST_CASE("prelu gradient at a negative input equals the slope") {
  const double a = 0.25;
  const double x0 = -3.0;
  Graph g;
  Var x = g.parameter(Tensor::scalar(x0));
  Var s = g.parameter(Tensor::scalar(a));
  g.backward(prelu(x, s));
  const double h = 1e-5;
  auto f = [&](double x) { return x >= 0 ? x : a * x; };
  const double numeric = (f(x0 + h) - f(x0 - h)) / (2 * h);
  CHECK(g.grad(x).item() == doctest::Approx(numeric).epsilon(1e-9));
  CHECK(g.grad(x).item() == doctest::Approx(a).epsilon(1e-12));
  CHECK(g.grad(s).item() == doctest::Approx(x0).epsilon(1e-12));
}

TEST_CASE("prelu slope gradient sums the negative entries") {
  Graph g;
  Var x = g.constant(Tensor::vector({1.0, -2.0, 3.0, -0.5}));
  Var s = g.parameter(Tensor::scalar(0.1));
  g.backward(sum(prelu(x, s)));
  CHECK(g.grad(s).item() == doctest::Approx(-2.5).epsilon(1e-12));
}

TEST_CASE("gaussian_logpdf constants") {
  Graph g;
  Var zero = g.constant(Tensor::scalar(0.0));
  CHECK(gaussian_logpdf(zero, zero, zero).item() == doctest::Approx(-0.9189385).epsilon(1e-7));
  Var one = g.constant(Tensor::scalar(1.0));
  CHECK(gaussian_logpdf(one, zero, zero).item() == doctest::Approx(-1.4189385).epsilon(1e-7));
}

TEST_CASE("gaussian_logpdf of a vector equals the per-element sum") {
  Rng rng(3);
  for (int instance = 0; instance < 20; ++instance) {
    Tensor x = random_tensor({7}, rng);
    Tensor mu = random_tensor({7}, rng);
    Tensor ls = random_tensor({7}, rng, 0.5);
    double expected = 0.0;
    for (std::size_t i = 0; i < 7; ++i) {
      const double d = x[i] - mu[i];
      expected += -0.5 * std::log(2 * M_PI) - ls[i] - d * d / (2 * std::exp(2 * ls[i]));
    }
    Graph g;
    const double got = gaussian_logpdf(g.constant(x), g.constant(mu), g.constant(ls)).item();
    CHECK(got == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("gaussian_logpdf clamps the log-scale and stays finite") {
  Graph g;
  Var x = g.constant(Tensor::vector({1e3, -1e3}));
  Var mu = g.constant(Tensor::scalar(0.0));
  const double low = gaussian_logpdf(x, mu, g.constant(Tensor::scalar(-50.0))).item();
  const double at_floor = gaussian_logpdf(x, mu, g.constant(Tensor::scalar(kMinLogScale))).item();
  CHECK(std::isfinite(low));
  CHECK(low == at_floor);
  const double high = gaussian_logpdf(x, mu, g.constant(Tensor::scalar(50.0))).item();
  CHECK(high == gaussian_logpdf(x, mu, g.constant(Tensor::scalar(kMaxLogScale))).item());
}

TEST_CASE("reparam_sample values") {
  Graph g;
  Var mu = g.constant(Tensor::vector({0.3, -1.2}));
  Var ls = g.constant(Tensor::vector({0.5, -0.7}));
  const Tensor sample = reparam_sample(mu, ls, Tensor({2}, 0.0)).value();
  CHECK(sample == mu.value());
  Var z = g.constant(Tensor::scalar(0.0));
  CHECK(reparam_sample(z, z, Tensor::scalar(1.5)).item() == 1.5);
}

TEST_CASE("reparam_sample gradient with respect to the log-scale") {
  const double mu0 = 0.4, ls0 = -0.3, eps = 1.7;
  Graph g;
  Var mu = g.parameter(Tensor::scalar(mu0));
  Var ls = g.parameter(Tensor::scalar(ls0));
  g.backward(reparam_sample(mu, ls, Tensor::scalar(eps)));
  const double h = 1e-5;
  const double numeric =
      ((mu0 + std::exp(ls0 + h) * eps) - (mu0 + std::exp(ls0 - h) * eps)) / (2 * h);
  CHECK(g.grad(ls).item() == doctest::Approx(std::exp(ls0) * eps).epsilon(1e-12));
  CHECK(g.grad(ls).item() == doctest::Approx(numeric).epsilon(1e-8));
  CHECK(g.grad(mu).item() == 1.0);
}

TEST_CASE("backward of a square") {
  Graph g;
  Var x = g.parameter(Tensor::scalar(3.0));
  g.backward(square(x));
  CHECK(g.grad(x).item() == 6.0);
}

TEST_CASE("backward of exp of a sum matches central differences") {
  Rng rng(4);
  Tensor x0 = random_tensor({5}, rng, 0.3);
  Graph g;
  Var x = g.parameter(x0);
  g.backward(exp(sum(x)));
  const Tensor grad = g.grad(x);
  const double h = 1e-5;
  for (std::size_t i = 0; i < 5; ++i) {
    double s = 0.0;
    for (double v : x0.values()) s += v;
    const double numeric = (std::exp(s + h) - std::exp(s - h)) / (2 * h);
    CHECK(ntfa::testing::relative_error(grad[i], numeric) < 1e-6);
  }
}

TEST_CASE("backward gives zero to constants and to leaves off the path") {
  Graph g;
  Var x = g.parameter(Tensor::scalar(2.0));
  Var unused = g.parameter(Tensor::vector({1.0, 2.0}));
  Var c = g.constant(Tensor::scalar(5.0));
  g.backward(mul(x, c));
  CHECK(g.grad(c).item() == 0.0);
  CHECK(g.grad(unused) == Tensor({2}, 0.0));
  CHECK(g.grad(x).item() == 5.0);
}

TEST_CASE("backward from a non-scalar root is a contract error") {
  Graph g;
  Var x = g.parameter(Tensor::vector({1.0, 2.0}));
  CHECK_THROWS_AS(g.backward(exp(x)), ContractError);
}

TEST_CASE("non-finite results raise a numerical error") {
  Graph g;
  Var x = g.parameter(Tensor::scalar(800.0));
  CHECK_THROWS_AS(exp(x), NumericalError);
  CHECK_THROWS_AS(log(g.constant(Tensor::scalar(-1.0))), NumericalError);
}

TEST_CASE("adam leaves parameters alone for a zero gradient") {
  Tensor p = Tensor::vector({1.0, -2.0});
  AdamSlot slot;
  for (int i = 0; i < 3; ++i) adam_step(p, Tensor({2}, 0.0), slot, 0.01);
  CHECK(p == Tensor::vector({1.0, -2.0}));
}

TEST_CASE("adam first step moves by the learning rate") {
  Tensor p = Tensor::scalar(1.0);
  AdamSlot slot;
  adam_step(p, Tensor::scalar(1.0), slot, 0.01);
  CHECK(p.item() == doctest::Approx(0.99).epsilon(1e-9));
}

TEST_CASE("adam two steps match a scalar oracle") {
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8, lr = 0.05;
  const double g1 = 0.7, g2 = -1.3;
  double x = 0.25, m = 0.0, v = 0.0;
  int t = 0;
  for (double gr : {g1, g2}) {
    ++t;
    m = b1 * m + (1 - b1) * gr;
    v = b2 * v + (1 - b2) * gr * gr;
    x -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
  }
  Tensor p = Tensor::scalar(0.25);
  AdamSlot slot;
  adam_step(p, Tensor::scalar(g1), slot, lr);
  adam_step(p, Tensor::scalar(g2), slot, lr);
  CHECK(p.item() == doctest::Approx(x).epsilon(1e-12));
  CHECK(slot.step == 2);
}

TEST_CASE("adam keeps independent slots") {
  Adam opt(0.1);
  Tensor a = Tensor::scalar(0.0);
  Tensor b = Tensor::vector({0.0, 0.0});
  opt.step(0, a, Tensor::scalar(1.0));
  opt.step(1, b, Tensor::vector({-1.0, 1.0}));
  opt.step(0, a, Tensor::scalar(1.0));
  CHECK(opt.slot(0).step == 2);
  CHECK(opt.slot(1).step == 1);
  CHECK(b[0] == doctest::Approx(0.1));
  CHECK(b[1] == doctest::Approx(-0.1));
  CHECK_THROWS_AS(opt.set_lr(0.0), ContractError);
}

TEST_CASE("every primitive passes a finite-difference check on random instances") {
  Rng rng(5);
  for (int instance = 0; instance < 100; ++instance) {
    for (const auto& [name, error] : ntfa::testing::primitive_gradient_errors(rng)) {
      CAPTURE(instance);
      CAPTURE(name);
      CHECK(error < 1e-4);
    }
  }
}

TEST_CASE("fused likelihood equals the elementwise Normal sum") {
  Rng rng(6);
  for (int instance = 0; instance < 20; ++instance) {
    Tensor y = random_tensor({4, 7}, rng);
    Tensor w = random_tensor({4, 3}, rng);
    Tensor f = random_tensor({3, 7}, rng);
    const double ls = rng.normal(0.0, 0.5);
    Tensor mean = naive_matmul(w, f);
    double expected = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double d = y[i] - mean[i];
      expected += -kHalfLog2Pi - ls - d * d / (2 * std::exp(2 * ls));
    }
    Graph g;
    const double got = gaussian_linear_loglik(y, g.constant(w), g.constant(f),
                                              g.constant(Tensor::scalar(ls)))
                           .item();
    CHECK(got == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("ops are bit-identical across repeated evaluation") {
  Rng rng(7);
  Tensor a = random_tensor({4, 5}, rng);
  Tensor b = random_tensor({5, 3}, rng);
  Tensor grid = random_tensor({10, 3}, rng);
  auto run = [&] {
    Graph g;
    Var pa = g.parameter(a);
    Var out = sum(rbf_factors(reshape(gather(matmul(pa, g.constant(b)), {0, 1, 2, 3, 4, 5}, {2, 3}),
                                      {2, 3}),
                              g.constant(Tensor::vector({0.1, 0.2})), grid));
    g.backward(out);
    return std::make_pair(out.item(), g.grad(pa));
  };
  auto first = run();
  auto second = run();
  CHECK(first.first == second.first);
  CHECK(first.second == second.second);
}

}
