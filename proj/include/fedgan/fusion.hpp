#pragma once

// GAN fusion: frozen federated generators and one trainable generator all
// consume the same noise batch, a merge layer concatenates their outputs
// (frozen first, in registration order), and a jointly trained
// discriminator over paired-combination data pushes the trainable
// generator toward the partner distribution. Freezing is enforced twice:
// frozen params carry trainable=false, and no optimizer is ever
// instantiated over them.

#include <string>
#include <utility>
#include <vector>

#include "fedgan/gan.hpp"
#include "fedgan/paired.hpp"

namespace fedgan {

struct FusionNetwork {
  std::vector<GeneratorModel> frozen_gens;
  GeneratorModel trainable_gen;
  DiscriminatorModel discriminator;

  int noise_dim() const { return trainable_gen.noise_dim(); }

  std::vector<int> output_dims() const {
    std::vector<int> dims;
    dims.reserve(frozen_gens.size() + 1);
    for (const auto& g : frozen_gens) dims.push_back(g.output_dim());
    dims.push_back(trainable_gen.output_dim());
    return dims;
  }

  int total_output_dim() const {
    int total = 0;
    for (int d : output_dims()) total += d;
    return total;
  }
};

// Assembles the fusion net: the supplied generators are copied in and
// frozen; the new generator and the discriminator are freshly initialized
// from the stream (generator first). The discriminator input must equal
// the sum of all generator output dims.
inline FusionNetwork build_fusion(std::vector<GeneratorModel> frozen, const MlpSpec& new_gen_spec,
                                  const MlpSpec& d_spec, RngStream& rng) {
  if (frozen.empty()) throw ShapeError("build_fusion: need at least one frozen generator");
  new_gen_spec.validate();
  validate_discriminator_spec(d_spec);
  const int d_z = new_gen_spec.input_dim();
  int total_out = new_gen_spec.output_dim();
  for (const auto& g : frozen) {
    g.spec.validate();
    if (g.noise_dim() != d_z) {
      throw ShapeError("build_fusion: all generators must share one noise dim, got " +
                       std::to_string(g.noise_dim()) + " vs " + std::to_string(d_z));
    }
    total_out += g.output_dim();
  }
  if (d_spec.input_dim() != total_out) {
    throw ShapeError("build_fusion: discriminator input dim " +
                     std::to_string(d_spec.input_dim()) + " must equal total generator output " +
                     std::to_string(total_out));
  }
  FusionNetwork net;
  net.frozen_gens = std::move(frozen);
  for (auto& g : net.frozen_gens)
    for (auto& p : g.params) p.trainable = false;
  net.trainable_gen = make_generator(new_gen_spec, rng);
  net.discriminator = make_discriminator(d_spec, rng);
  return net;
}

// concat(G1(z), ..., Gk(z), G_new(z)): one z batch feeds every generator.
inline Tensor fusion_forward(const FusionNetwork& net, const Tensor& z) {
  if (z.rank() != 2 || z.cols() != net.noise_dim()) {
    throw ShapeError("fusion_forward: z " + shape_str(z.shape) + " vs noise dim " +
                     std::to_string(net.noise_dim()));
  }
  std::vector<Tensor> parts;
  parts.reserve(net.frozen_gens.size() + 1);
  for (const auto& g : net.frozen_gens) parts.push_back(generate(g, z));
  parts.push_back(generate(net.trainable_gen, z));
  Tensor out({z.rows(), net.total_output_dim()});
  int col = 0;
  for (const Tensor& p : parts) {
    for (int r = 0; r < p.rows(); ++r)
      for (int j = 0; j < p.cols(); ++j) out.at(r, col + j) = p.at(r, j);
    col += p.cols();
  }
  return out;
}

// Same composite forward, recorded for backprop. Frozen generators are
// registered as tape params too: their grads are computed (the chain rule
// runs through them) but no optimizer ever reads those buffers.
inline int fusion_forward_node(BasicTape<float>& tape, FusionNetwork& net, int z_node) {
  std::vector<int> parts;
  parts.reserve(net.frozen_gens.size() + 1);
  for (auto& g : net.frozen_gens) {
    parts.push_back(mlp_forward<float>(tape, g.spec, g.params, z_node));
  }
  parts.push_back(
      mlp_forward<float>(tape, net.trainable_gen.spec, net.trainable_gen.params, z_node));
  return tape.concat_cols(parts);
}

// Draw n fused rows on fresh noise; component dims follow generator order.
inline PairedDataset sample_pairs(const FusionNetwork& net, int n, RngStream& rng) {
  Tensor z = sample_noise(n, net.noise_dim(), rng);
  return PairedDataset(fusion_forward(net, z), net.output_dims());
}

// Alternating fusion training with persistent optimizer state, so the
// cascade can swap refreshed frozen generators in mid-run without
// restarting Adam for the trainable generator.
class FusionTrainer {
 public:
  FusionTrainer(FusionNetwork& net, const PairedDataset& data, const GanTrainConfig& cfg)
      : net_(net),
        data_(data),
        cfg_(cfg),
        rng_(cfg.seed, cfg.stream),
        opt_g_(net.trainable_gen.params),
        opt_d_(net.discriminator.params) {
    cfg_.validate();
    if (data_.feature_dim() != net_.discriminator.input_dim() ||
        data_.feature_dim() != net_.total_output_dim()) {
      throw ShapeError("fusion training: data feature dim " + std::to_string(data_.feature_dim()) +
                       " must equal discriminator input " +
                       std::to_string(net_.discriminator.input_dim()));
    }
  }

  StepLoss step() {
    StepLoss losses;
    for (int k = 0; k < cfg_.d_steps_per_g_step; ++k) {
      Tensor real =
          gather_rows(data_.samples, sample_indices(data_.size(), cfg_.batch_size, rng_));
      Tensor fake = fusion_forward(net_, sample_noise(cfg_.batch_size, net_.noise_dim(), rng_));
      zero_grads<float>(net_.discriminator.params);
      BasicTape<float> tape;
      int loss = d_loss_node<float>(tape, net_.discriminator, tape.input(real), tape.input(fake));
      losses.d_loss = static_cast<double>(tape.value(loss).data[0]);
      tape.backward(loss);
      adam_step<float>(net_.discriminator.params, cfg_.lr_d, opt_d_);
    }
    Tensor z = sample_noise(cfg_.batch_size, net_.noise_dim(), rng_);
    zero_all_grads();
    BasicTape<float> tape;
    int fake_node = fusion_forward_node(tape, net_, tape.input(z));
    int loss = g_loss_node<float>(tape, net_.discriminator, fake_node);
    losses.g_loss = static_cast<double>(tape.value(loss).data[0]);
    tape.backward(loss);
    adam_step<float>(net_.trainable_gen.params, cfg_.lr_g, opt_g_);
    return losses;
  }

  std::vector<StepLoss> run(int steps) {
    if (steps < 0) throw ConfigError("fusion training: negative step count");
    std::vector<StepLoss> history;
    history.reserve(static_cast<size_t>(steps));
    for (int i = 0; i < steps; ++i) history.push_back(step());
    return history;
  }

  // Swap in refreshed frozen generators (same count, same dims). The
  // trainable generator, discriminator, and both Adam states carry on.
  void replace_frozen(std::vector<GeneratorModel> frozen) {
    if (frozen.size() != net_.frozen_gens.size()) {
      throw ShapeError("replace_frozen: generator count changed");
    }
    for (size_t i = 0; i < frozen.size(); ++i) {
      if (frozen[i].noise_dim() != net_.noise_dim() ||
          frozen[i].output_dim() != net_.frozen_gens[i].output_dim()) {
        throw ShapeError("replace_frozen: dimension mismatch at slot " + std::to_string(i));
      }
    }
    for (auto& g : frozen)
      for (auto& p : g.params) p.trainable = false;
    net_.frozen_gens = std::move(frozen);
  }

 private:
  void zero_all_grads() {
    for (auto& g : net_.frozen_gens) zero_grads<float>(g.params);
    zero_grads<float>(net_.trainable_gen.params);
    zero_grads<float>(net_.discriminator.params);
  }

  FusionNetwork& net_;
  const PairedDataset& data_;
  GanTrainConfig cfg_;
  RngStream rng_;
  BasicAdamState<float> opt_g_;
  BasicAdamState<float> opt_d_;
};

inline std::vector<StepLoss> train_fusion(FusionNetwork& net, const PairedDataset& data,
                                          const GanTrainConfig& cfg) {
  FusionTrainer trainer(net, data, cfg);
  return trainer.run(cfg.steps);
}

}  // namespace fedgan
