#pragma once

// Plain MLP: spec (dims + activations), Glorot-uniform init, and a forward
// pass that records onto a tape. mlp_eval runs the same op sequence on a
// throwaway tape when no gradients are wanted.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "fedgan/rng.hpp"
#include "fedgan/tape.hpp"
#include "fedgan/tensor.hpp"

namespace fedgan {

struct MlpSpec {
  std::vector<int> layer_dims;           // d0 .. dL
  std::vector<Activation> activations;   // one per layer, L entries

  int layer_count() const { return static_cast<int>(activations.size()); }
  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }

  void validate() const {
    if (activations.empty()) throw ShapeError("mlp spec: no layers");
    if (layer_dims.size() != activations.size() + 1) {
      throw ShapeError("mlp spec: need " + std::to_string(activations.size() + 1) +
                       " dims for " + std::to_string(activations.size()) + " layers");
    }
    for (int d : layer_dims) {
      if (d < 1) throw ShapeError("mlp spec: non-positive dim");
    }
  }

  bool operator==(const MlpSpec&) const = default;
};

inline MlpSpec mlp_spec(std::vector<int> dims, std::vector<Activation> acts) {
  MlpSpec s{std::move(dims), std::move(acts)};
  s.validate();
  return s;
}

// Glorot-uniform weights, zero biases. Per layer l the weight is shaped
// (d_{l-1}, d_l) with entries uniform(-a, a), a = sqrt(6 / (d_in + d_out)),
// drawn row-major from the given stream; biases consume no draws.
// Returned order: W1, b1, W2, b2, ...
template <typename T = float>
std::vector<BasicParamTensor<T>> mlp_init(const MlpSpec& spec, RngStream& rng) {
  spec.validate();
  std::vector<BasicParamTensor<T>> params;
  params.reserve(2 * spec.layer_count());
  for (int l = 0; l < spec.layer_count(); ++l) {
    const int d_in = spec.layer_dims[static_cast<size_t>(l)];
    const int d_out = spec.layer_dims[static_cast<size_t>(l) + 1];
    const double a = std::sqrt(6.0 / (d_in + d_out));
    BasicTensor<T> w({d_in, d_out});
    for (auto& v : w.data) v = static_cast<T>(rng.uniform(-a, a));
    params.emplace_back(std::move(w));
    params.emplace_back(BasicTensor<T>({d_out}));
  }
  return params;
}

// Forward pass with parameters registered on the tape (gradients flow).
template <typename T>
int mlp_forward(BasicTape<T>& tape, const MlpSpec& spec,
                std::span<BasicParamTensor<T>> params, int input) {
  spec.validate();
  if (params.size() != static_cast<size_t>(2 * spec.layer_count())) {
    throw ShapeError("mlp_forward: expected " + std::to_string(2 * spec.layer_count()) +
                     " param tensors, got " + std::to_string(params.size()));
  }
  if (tape.value(input).rank() != 2 || tape.value(input).cols() != spec.input_dim()) {
    throw ShapeError("mlp_forward: input " + shape_str(tape.value(input).shape) +
                     " does not match feature dim " + std::to_string(spec.input_dim()));
  }
  int h = input;
  for (int l = 0; l < spec.layer_count(); ++l) {
    int w = tape.param(params[static_cast<size_t>(2 * l)]);
    int b = tape.param(params[static_cast<size_t>(2 * l) + 1]);
    h = tape.activation(tape.add_row(tape.matmul(h, w), b),
                        spec.activations[static_cast<size_t>(l)]);
  }
  return h;
}

// Gradient-free evaluation; same op sequence, parameters as constants.
template <typename T>
BasicTensor<T> mlp_eval(const MlpSpec& spec, std::span<const BasicParamTensor<T>> params,
                        const BasicTensor<T>& x) {
  spec.validate();
  if (params.size() != static_cast<size_t>(2 * spec.layer_count())) {
    throw ShapeError("mlp_eval: wrong param count");
  }
  BasicTape<T> tape;
  int h = tape.input(x);
  if (x.rank() != 2 || x.cols() != spec.input_dim()) {
    throw ShapeError("mlp_eval: input " + shape_str(x.shape) + " vs feature dim " +
                     std::to_string(spec.input_dim()));
  }
  for (int l = 0; l < spec.layer_count(); ++l) {
    int w = tape.input(params[static_cast<size_t>(2 * l)].value);
    int b = tape.input(params[static_cast<size_t>(2 * l) + 1].value);
    h = tape.activation(tape.add_row(tape.matmul(h, w), b),
                        spec.activations[static_cast<size_t>(l)]);
  }
  return tape.value(h);
}

}  // namespace fedgan
