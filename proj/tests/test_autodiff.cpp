#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "fedgan/gradcheck.hpp"
#include "fedgan/mlp.hpp"
#include "fedgan/rng.hpp"
#include "fedgan/tape.hpp"

using namespace fedgan;

namespace {

// Independent finite-difference probe used before trusting any analytic
// gradient: central differences of the forward value only.
template <typename T>
double fd_probe(const std::function<int(BasicTape<T>&)>& f,
                BasicParamTensor<T>& p, size_t elem, double eps) {
  auto eval = [&]() {
    BasicTape<T> t;
    return static_cast<double>(t.value(f(t)).data[0]);
  };
  const T saved = p.value.data[elem];
  p.value.data[elem] = static_cast<T>(static_cast<double>(saved) + eps);
  const double fp = eval();
  p.value.data[elem] = static_cast<T>(static_cast<double>(saved) - eps);
  const double fm = eval();
  p.value.data[elem] = saved;
  return (fp - fm) / (2.0 * eps);
}

}  // namespace

TEST_CASE("sum of squares has analytic gradient 2x", "[autodiff]") {
  ParamTensor x(Tensor({2}, {1.f, 2.f}));
  BasicTape<float> t;
  int xp = t.param(x);
  int loss = t.sum(t.mul(xp, xp));
  CHECK(t.value(loss).data[0] == Catch::Approx(5.0));
  t.backward(loss);
  CHECK(x.grad.data[0] == Catch::Approx(2.f));
  CHECK(x.grad.data[1] == Catch::Approx(4.f));
}

TEST_CASE("loss independent of a param leaves its grad zero", "[autodiff]") {
  ParamTensor used(Tensor({2}, {1.f, -1.f}));
  ParamTensor unused(Tensor({3}, {5.f, 5.f, 5.f}));
  BasicTape<float> t;
  int a = t.param(used);
  t.param(unused);
  int loss = t.sum(t.mul(a, a));
  t.backward(loss);
  CHECK(unused.grad.data == std::vector<float>{0.f, 0.f, 0.f});
  CHECK(used.grad.data[0] == Catch::Approx(2.f));
}

TEST_CASE("cube at x=2 passes grad_check tightly", "[autodiff]") {
  BasicParamTensor<double> x(BasicTensor<double>({1}, {2.0}));
  std::vector<BasicParamTensor<double>> params{x};
  auto build = [&](BasicTape<double>& t) {
    int xp = t.param(params[0]);
    return t.sum(t.mul(t.mul(xp, xp), xp));
  };
  double err = grad_check<double>(build, params, 1e-3);
  CHECK(err < 1e-6);
  // analytic value itself: d/dx x^3 = 12 at x=2
  for (auto& p : params) p.grad = BasicTensor<double>(p.grad.shape);
  BasicTape<double> t;
  int loss = build(t);
  t.backward(loss);
  CHECK(params[0].grad.data[0] == Catch::Approx(12.0).epsilon(1e-12));
}

TEST_CASE("constant function gives zero analytic and numeric gradients", "[autodiff]") {
  BasicParamTensor<double> x(BasicTensor<double>({2}, {1.0, 2.0}));
  std::vector<BasicParamTensor<double>> params{x};
  auto build = [&](BasicTape<double>& t) {
    t.param(params[0]);
    return t.sum(t.input(BasicTensor<double>({2}, {3.0, 4.0})));
  };
  CHECK(grad_check<double>(build, params, 1e-3) == 0.0);
}

TEST_CASE("random 2-layer MLP matches centered finite differences", "[autodiff]") {
  // The FD oracle ran first during development; the 1e-3 bound below is the
  // frozen acceptance threshold (eps 1e-3, 64-bit evaluation).
  RngStream rng(2024, 0);
  MlpSpec spec = mlp_spec({3, 5, 2}, {Activation::leaky_relu, Activation::tanh});
  auto params = mlp_init<double>(spec, rng);
  BasicTensor<double> x({4, 3});
  for (auto& v : x.data) v = rng.normal();

  auto build = [&](BasicTape<double>& t) {
    int in = t.input(x);
    int y = mlp_forward<double>(t, spec, params, in);
    return t.mean(t.mul(y, y));
  };
  CHECK(grad_check<double>(build, params, 1e-3) < 1e-3);

  // Spot-check one weight against the independent probe.
  for (auto& p : params) p.grad = BasicTensor<double>(p.grad.shape);
  BasicTape<double> t;
  t.backward(build(t));
  double numeric = fd_probe<double>(build, params[0], 0, 1e-4);
  CHECK(params[0].grad.data[0] == Catch::Approx(numeric).margin(1e-6));
}

TEST_CASE("every primitive op differentiates correctly", "[autodiff]") {
  RngStream rng(7, 1);
  BasicParamTensor<double> w(BasicTensor<double>({3, 2}));
  BasicParamTensor<double> b(BasicTensor<double>({2}));
  for (auto& v : w.value.data) v = rng.normal() * 0.5;
  for (auto& v : b.value.data) v = rng.normal() * 0.5;
  BasicTensor<double> x({2, 3});
  for (auto& v : x.data) v = rng.normal();
  std::vector<BasicParamTensor<double>> params;
  params.push_back(w);
  params.push_back(b);

  auto acts = {Activation::linear, Activation::relu, Activation::leaky_relu,
               Activation::tanh, Activation::sigmoid};
  for (Activation act : acts) {
    auto build = [&](BasicTape<double>& t) {
      int in = t.input(x);
      int h = t.activation(t.add_row(t.matmul(in, t.param(params[0])), t.param(params[1])), act);
      int sig = t.activation(h, Activation::sigmoid);
      int joined = t.concat_cols({h, sig});
      int shifted = t.add_scalar(t.scale(joined, 0.5), 0.75);
      int logged = t.log_clamped(t.rsub_scalar(2.0, t.activation(shifted, Activation::sigmoid)), 1e-7);
      int mixed = t.sub(t.add(logged, logged), logged);
      return t.mean(t.mul(mixed, mixed));
    };
    INFO("activation code " << static_cast<int>(act));
    CHECK(grad_check<double>(build, params, 1e-4) < 1e-6);
  }
}

TEST_CASE("backward misuse is rejected", "[autodiff]") {
  BasicTape<float> empty;
  CHECK_THROWS_AS(empty.backward(0), Error);

  ParamTensor x(Tensor({2}, {1.f, 2.f}));
  BasicTape<float> t;
  int xp = t.param(x);
  CHECK_THROWS_AS(t.backward(xp), ShapeError);  // non-scalar loss
  CHECK_THROWS_AS(t.backward(99), Error);       // unknown node
}

TEST_CASE("ops reject mismatched shapes instead of broadcasting", "[autodiff]") {
  BasicTape<float> t;
  int a = t.input(Tensor({2, 3}));
  int b = t.input(Tensor({3, 2}));
  int v = t.input(Tensor({2}));
  CHECK_THROWS_AS(t.add(a, b), ShapeError);
  CHECK_THROWS_AS(t.mul(a, v), ShapeError);
  CHECK_THROWS_AS(t.matmul(a, a), ShapeError);
  CHECK_THROWS_AS(t.add_row(a, v), ShapeError);  // bias must have 3 entries
  CHECK_THROWS_AS(t.concat_cols({a, b}), ShapeError);
  CHECK_NOTHROW(t.matmul(a, b));
}

TEST_CASE("log clamp floors the argument and kills the gradient there", "[autodiff]") {
  BasicParamTensor<double> x(BasicTensor<double>({2}, {0.5, 1e-9}));
  std::vector<BasicParamTensor<double>> params{x};
  BasicTape<double> t;
  int loss = t.sum(t.log_clamped(t.param(params[0]), 1e-7));
  CHECK(t.value(loss).data[0] == Catch::Approx(std::log(0.5) + std::log(1e-7)));
  t.backward(loss);
  CHECK(params[0].grad.data[0] == Catch::Approx(2.0));
  CHECK(params[0].grad.data[1] == 0.0);
}

TEST_CASE("mean accumulates in 64-bit", "[autodiff]") {
  // 1e6 entries of 0.1f: a float32 running sum drifts well past 1e-3;
  // the double accumulator keeps the mean at 0.1 to float precision.
  BasicTape<float> t;
  Tensor big({1000, 1000});
  std::fill(big.data.begin(), big.data.end(), 0.1f);
  int m = t.mean(t.input(big));
  CHECK(std::abs(t.value(m).data[0] - 0.1f) < 1e-6f);
}
