#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "fedgan/gan.hpp"
#include "fedgan/gradcheck.hpp"

using namespace fedgan;

namespace {

// Zero weights and biases: sigmoid head outputs exactly 0.5 everywhere.
DiscriminatorModel half_discriminator(int input_dim) {
  MlpSpec spec = mlp_spec({input_dim, 1}, {Activation::sigmoid});
  DiscriminatorModel d{spec, {}};
  d.params.emplace_back(Tensor({input_dim, 1}));
  d.params.emplace_back(Tensor({1}));
  return d;
}

// w scales the single input so sigmoid saturates: D(x) -> 1 for x > 0,
// D(x) -> 0 for x < 0.
DiscriminatorModel saturating_discriminator(float w) {
  MlpSpec spec = mlp_spec({1, 1}, {Activation::sigmoid});
  DiscriminatorModel d{spec, {}};
  d.params.emplace_back(Tensor({1, 1}, {w}));
  d.params.emplace_back(Tensor({1}));
  return d;
}

}  // namespace

TEST_CASE("sample_noise is reproducible and stream-separated", "[gan]") {
  RngStream a(5, 1), b(5, 1), c(5, 2);
  Tensor za = sample_noise(16, 4, a);
  Tensor zb = sample_noise(16, 4, b);
  Tensor zc = sample_noise(16, 4, c);
  CHECK(za.data == zb.data);
  CHECK(za.data != zc.data);
  CHECK_THROWS_AS(sample_noise(0, 4, a), ShapeError);
}

TEST_CASE("sample_noise moments match a standard normal", "[gan]") {
  RngStream rng(123, 0);
  const int n = 10000, d = 8;
  Tensor z = sample_noise(n, d, rng);
  for (int j = 0; j < d; ++j) {
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
      sum += z.at(i, j);
      sq += static_cast<double>(z.at(i, j)) * z.at(i, j);
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.05);
    CHECK(std::abs(var - 1.0) < 0.1);
  }
}

TEST_CASE("identity generator reproduces z", "[gan]") {
  GeneratorModel g{mlp_spec({2, 2}, {Activation::linear}), {}};
  g.params.emplace_back(Tensor({2, 2}, {1.f, 0.f, 0.f, 1.f}));
  g.params.emplace_back(Tensor({2}));
  Tensor z({3, 2}, {1.f, 2.f, -1.f, 0.5f, 0.f, -3.f});
  CHECK(generate(g, z).data == z.data);
}

TEST_CASE("generator rows are independent of batch packing", "[gan]") {
  RngStream rng(8, 0);
  auto g = make_generator(mlp_spec({4, 8, 3}, {Activation::leaky_relu, Activation::linear}), rng);
  Tensor z = sample_noise(5, 4, rng);
  Tensor batch_out = generate(g, z);
  for (int r = 0; r < 5; ++r) {
    Tensor single({1, 4});
    for (int j = 0; j < 4; ++j) single.at(0, j) = z.at(r, j);
    Tensor row_out = generate(g, single);
    for (int j = 0; j < 3; ++j) REQUIRE(row_out.at(0, j) == batch_out.at(r, j));
  }
}

TEST_CASE("d_loss at the indifferent discriminator equals 2 ln 2", "[gan]") {
  auto d = half_discriminator(2);
  Tensor real({4, 2}, {1.f, 2.f, 3.f, 4.f, 5.f, 6.f, 7.f, 8.f});
  Tensor fake({4, 2}, {0.f, 0.f, 1.f, 1.f, 2.f, 2.f, 3.f, 3.f});
  CHECK(d_loss(d, real, fake) == Catch::Approx(2.0 * std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("g_loss is zero when the discriminator is fully fooled", "[gan]") {
  auto d = saturating_discriminator(80.f);
  Tensor fake({8, 1});
  for (auto& v : fake.data) v = 1.f;  // D(fake) saturates to 1
  CHECK(std::abs(g_loss(d, fake)) < 1e-6);
}

TEST_CASE("d_loss vanishes under perfect discrimination", "[gan]") {
  auto d = saturating_discriminator(80.f);
  Tensor real({8, 1});
  Tensor fake({8, 1});
  for (auto& v : real.data) v = 1.f;   // D(real) -> 1
  for (auto& v : fake.data) v = -1.f;  // D(fake) -> 0
  CHECK(std::abs(d_loss(d, real, fake)) < 1e-6);
}

TEST_CASE("both GAN losses pass grad_check", "[gan]") {
  RngStream rng(31, 0);
  MlpSpec g_spec = mlp_spec({3, 6, 2}, {Activation::leaky_relu, Activation::linear});
  MlpSpec d_spec = mlp_spec({2, 6, 1}, {Activation::leaky_relu, Activation::sigmoid});
  auto g = make_generator<double>(g_spec, rng);
  auto d = make_discriminator<double>(d_spec, rng);
  BasicTensor<double> real({4, 2});
  BasicTensor<double> z({4, 3});
  for (auto& v : real.data) v = rng.normal();
  for (auto& v : z.data) v = rng.normal();

  SECTION("discriminator loss w.r.t. discriminator params") {
    BasicTensor<double> fake = generate(g, z);
    auto build = [&](BasicTape<double>& t) {
      return d_loss_node<double>(t, d, t.input(real), t.input(fake));
    };
    CHECK(grad_check<double>(build, d.params, 1e-4) < 1e-3);
  }
  SECTION("generator loss w.r.t. generator params through the discriminator") {
    auto build = [&](BasicTape<double>& t) {
      int fake = mlp_forward<double>(t, g.spec, g.params, t.input(z));
      return g_loss_node<double>(t, d, fake);
    };
    CHECK(grad_check<double>(build, g.params, 1e-4) < 1e-3);
  }
}

TEST_CASE("zero training steps leave both models bit-identical", "[gan]") {
  RngStream rng(17, 0);
  auto g = make_generator(mlp_spec({2, 4, 1}, {Activation::relu, Activation::linear}), rng);
  auto d = make_discriminator(mlp_spec({1, 4, 1}, {Activation::relu, Activation::sigmoid}), rng);
  auto g_bits = g.params;
  auto d_bits = d.params;
  Tensor data({16, 1});
  for (auto& v : data.data) v = 2.f;
  GanTrainConfig cfg;
  cfg.steps = 0;
  auto hist = train_gan(g, d, data, cfg);
  CHECK(hist.empty());
  for (size_t i = 0; i < g.params.size(); ++i) CHECK(g.params[i].value.data == g_bits[i].value.data);
  for (size_t i = 0; i < d.params.size(); ++i) CHECK(d.params[i].value.data == d_bits[i].value.data);
}

TEST_CASE("training is deterministic under a fixed seed", "[gan]") {
  auto run = [] {
    RngStream rng(23, 0);
    auto g = make_generator(mlp_spec({2, 8, 1}, {Activation::leaky_relu, Activation::linear}), rng);
    auto d = make_discriminator(mlp_spec({1, 8, 1}, {Activation::leaky_relu, Activation::sigmoid}), rng);
    Tensor data({64, 1});
    RngStream drng(99, 9);
    for (auto& v : data.data) v = static_cast<float>(drng.normal(2.0, 0.5));
    GanTrainConfig cfg;
    cfg.steps = 40;
    cfg.seed = 5;
    return train_gan(g, d, data, cfg);
  };
  auto h1 = run();
  auto h2 = run();
  REQUIRE(h1.size() == 40);
  for (size_t i = 0; i < h1.size(); ++i) {
    REQUIRE(h1[i].d_loss == h2[i].d_loss);
    REQUIRE(h1[i].g_loss == h2[i].g_loss);
    REQUIRE(std::isfinite(h1[i].d_loss));
    REQUIRE(std::isfinite(h1[i].g_loss));
  }
}

TEST_CASE("train_gan never touches a frozen parameter", "[gan]") {
  RngStream rng(29, 0);
  auto g = make_generator(mlp_spec({2, 8, 1}, {Activation::leaky_relu, Activation::linear}), rng);
  auto d = make_discriminator(mlp_spec({1, 8, 1}, {Activation::leaky_relu, Activation::sigmoid}), rng);
  g.params[0].trainable = false;
  const auto frozen_bits = g.params[0].value.data;
  Tensor data({32, 1});
  RngStream drng(1, 1);
  for (auto& v : data.data) v = static_cast<float>(drng.normal());
  GanTrainConfig cfg;
  cfg.steps = 25;
  train_gan(g, d, data, cfg);
  CHECK(g.params[0].value.data == frozen_bits);
  CHECK(g.params[2].value.data != frozen_bits);  // sibling layer did move
}

TEST_CASE("train_gan rejects mismatched dims", "[gan]") {
  RngStream rng(3, 0);
  auto g = make_generator(mlp_spec({2, 4, 2}, {Activation::relu, Activation::linear}), rng);
  auto d = make_discriminator(mlp_spec({1, 4, 1}, {Activation::relu, Activation::sigmoid}), rng);
  Tensor data({8, 2});
  GanTrainConfig cfg;
  cfg.steps = 1;
  CHECK_THROWS_AS(train_gan(g, d, data, cfg), ShapeError);
}
