#pragma once

// Vanilla GAN pieces: generator/discriminator models, shared-noise sampling,
// the standard minimax discriminator loss, the non-saturating generator
// loss, and the alternating training loop each client runs locally.

#include <cstdint>
#include <span>
#include <vector>

#include "fedgan/mlp.hpp"
#include "fedgan/optim.hpp"
#include "fedgan/rng.hpp"
#include "fedgan/tape.hpp"
#include "fedgan/tensor.hpp"

namespace fedgan {

template <typename T = float>
struct BasicGeneratorModel {
  MlpSpec spec;
  std::vector<BasicParamTensor<T>> params;

  int noise_dim() const { return spec.input_dim(); }
  int output_dim() const { return spec.output_dim(); }
};

template <typename T = float>
struct BasicDiscriminatorModel {
  MlpSpec spec;
  std::vector<BasicParamTensor<T>> params;

  int input_dim() const { return spec.input_dim(); }
};

using GeneratorModel = BasicGeneratorModel<float>;
using DiscriminatorModel = BasicDiscriminatorModel<float>;

inline void validate_discriminator_spec(const MlpSpec& spec) {
  spec.validate();
  if (spec.output_dim() != 1) {
    throw ShapeError("discriminator must end in a single unit");
  }
  if (spec.activations.back() != Activation::sigmoid) {
    throw ShapeError("discriminator head must be sigmoid");
  }
}

template <typename T = float>
BasicGeneratorModel<T> make_generator(const MlpSpec& spec, RngStream& rng) {
  spec.validate();
  return {spec, mlp_init<T>(spec, rng)};
}

template <typename T = float>
BasicDiscriminatorModel<T> make_discriminator(const MlpSpec& spec, RngStream& rng) {
  validate_discriminator_spec(spec);
  return {spec, mlp_init<T>(spec, rng)};
}

// One batch of i.i.d. standard-normal noise rows from the given stream.
inline Tensor sample_noise(int n, int d_z, RngStream& rng) {
  if (n < 1 || d_z < 1) throw ShapeError("sample_noise: n and d_z must be positive");
  Tensor z({n, d_z});
  for (auto& v : z.data) v = static_cast<float>(rng.normal());
  return z;
}

template <typename T>
BasicTensor<T> generate(const BasicGeneratorModel<T>& g, const BasicTensor<T>& z) {
  return mlp_eval<T>(g.spec, g.params, z);
}

// Probabilities are clamped away from 0 before the log so a saturated
// discriminator cannot produce -inf.
constexpr double kLogClamp = 1e-7;

template <typename T>
int d_loss_node(BasicTape<T>& tape, BasicDiscriminatorModel<T>& d, int real, int fake) {
  int p_real = mlp_forward<T>(tape, d.spec, d.params, real);
  int p_fake = mlp_forward<T>(tape, d.spec, d.params, fake);
  int term_real = tape.mean(tape.log_clamped(p_real, static_cast<T>(kLogClamp)));
  int term_fake =
      tape.mean(tape.log_clamped(tape.rsub_scalar(T(1), p_fake), static_cast<T>(kLogClamp)));
  return tape.scale(tape.add(term_real, term_fake), T(-1));
}

// Non-saturating form: maximize log D(fake) instead of minimizing
// log(1 - D(fake)).
template <typename T>
int g_loss_node(BasicTape<T>& tape, BasicDiscriminatorModel<T>& d, int fake) {
  int p_fake = mlp_forward<T>(tape, d.spec, d.params, fake);
  return tape.scale(tape.mean(tape.log_clamped(p_fake, static_cast<T>(kLogClamp))), T(-1));
}

template <typename T>
double d_loss(BasicDiscriminatorModel<T>& d, const BasicTensor<T>& real,
              const BasicTensor<T>& fake) {
  BasicTape<T> tape;
  return static_cast<double>(
      tape.value(d_loss_node(tape, d, tape.input(real), tape.input(fake))).data[0]);
}

template <typename T>
double g_loss(BasicDiscriminatorModel<T>& d, const BasicTensor<T>& fake) {
  BasicTape<T> tape;
  return static_cast<double>(tape.value(g_loss_node(tape, d, tape.input(fake))).data[0]);
}

struct GanTrainConfig {
  int batch_size = 64;
  int steps = 2000;
  double lr_g = 1e-3;
  double lr_d = 1e-3;
  int d_steps_per_g_step = 1;
  uint64_t seed = 1;
  uint64_t stream = 0;  // rng stream id for this trainer

  void validate() const {
    if (batch_size < 1 || d_steps_per_g_step < 1) throw ConfigError("gan config: batch and d_steps must be positive");
    if (steps < 0) throw ConfigError("gan config: steps must be >= 0");
    if (lr_g <= 0 || lr_d <= 0) throw ConfigError("gan config: learning rates must be positive");
  }
};

struct StepLoss {
  double d_loss = 0.0;
  double g_loss = 0.0;
};

inline std::vector<int> sample_indices(int n, int count, RngStream& rng) {
  std::vector<int> idx(static_cast<size_t>(count));
  for (auto& i : idx) {
    i = std::min(n - 1, static_cast<int>(rng.uniform() * static_cast<double>(n)));
  }
  return idx;
}

// Alternating updates: d_steps_per_g_step discriminator steps, then one
// generator step. Dataset rows are sampled with replacement from the
// trainer's own rng stream, so the whole trajectory is a pure function of
// (models, dataset, config).
inline std::vector<StepLoss> train_gan(GeneratorModel& g, DiscriminatorModel& d,
                                       const Tensor& dataset, const GanTrainConfig& cfg) {
  cfg.validate();
  validate_discriminator_spec(d.spec);
  if (dataset.rank() != 2 || dataset.cols() != g.output_dim() ||
      dataset.cols() != d.input_dim()) {
    throw ShapeError("train_gan: dataset feature dim must equal generator output and discriminator input");
  }
  RngStream rng(cfg.seed, cfg.stream);
  BasicAdamState<float> opt_g(g.params);
  BasicAdamState<float> opt_d(d.params);
  std::vector<StepLoss> history;
  history.reserve(static_cast<size_t>(cfg.steps));

  for (int step = 0; step < cfg.steps; ++step) {
    StepLoss losses;
    for (int k = 0; k < cfg.d_steps_per_g_step; ++k) {
      Tensor real = gather_rows(dataset, sample_indices(dataset.rows(), cfg.batch_size, rng));
      Tensor fake = generate(g, sample_noise(cfg.batch_size, g.noise_dim(), rng));
      zero_grads<float>(d.params);
      BasicTape<float> tape;
      int loss = d_loss_node<float>(tape, d, tape.input(real), tape.input(fake));
      losses.d_loss = static_cast<double>(tape.value(loss).data[0]);
      tape.backward(loss);
      adam_step<float>(d.params, cfg.lr_d, opt_d);
    }
    Tensor z = sample_noise(cfg.batch_size, g.noise_dim(), rng);
    zero_grads<float>(g.params);
    zero_grads<float>(d.params);
    BasicTape<float> tape;
    int fake_node = mlp_forward<float>(tape, g.spec, g.params, tape.input(z));
    int loss = g_loss_node<float>(tape, d, fake_node);
    losses.g_loss = static_cast<double>(tape.value(loss).data[0]);
    tape.backward(loss);
    adam_step<float>(g.params, cfg.lr_g, opt_g);
    history.push_back(losses);
  }
  return history;
}

}  // namespace fedgan
