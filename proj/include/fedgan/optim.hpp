#pragma once

// SGD and Adam over ParamTensor lists. A trainable=false param is left
// entirely alone: value, optimizer state, and grad buffer all keep their
// bits. Trainable params get updated and their grads zeroed after the step.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "fedgan/tensor.hpp"

namespace fedgan {

template <typename T>
void zero_grads(std::span<BasicParamTensor<T>> params) {
  for (auto& p : params) {
    std::fill(p.grad.data.begin(), p.grad.data.end(), T(0));
  }
}

template <typename T>
void sgd_step(std::span<BasicParamTensor<T>> params, double lr) {
  for (auto& p : params) {
    if (!p.trainable) continue;
    for (size_t e = 0; e < p.value.data.size(); ++e) {
      p.value.data[e] = static_cast<T>(static_cast<double>(p.value.data[e]) -
                                       lr * static_cast<double>(p.grad.data[e]));
      p.grad.data[e] = T(0);
    }
  }
}

// First/second moment buffers, one pair per param tensor. beta1 defaults to
// 0.5 (GAN convention). The step counter is shared across the param list.
template <typename T>
struct BasicAdamState {
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t t = 0;
  std::vector<BasicTensor<T>> m;
  std::vector<BasicTensor<T>> v;

  explicit BasicAdamState(std::span<const BasicParamTensor<T>> params, double b1 = 0.5,
                          double b2 = 0.999, double epsilon = 1e-8)
      : beta1(b1), beta2(b2), eps(epsilon) {
    m.reserve(params.size());
    v.reserve(params.size());
    for (const auto& p : params) {
      m.emplace_back(p.value.shape);
      v.emplace_back(p.value.shape);
    }
  }

  explicit BasicAdamState(const std::vector<BasicParamTensor<T>>& params, double b1 = 0.5,
                          double b2 = 0.999, double epsilon = 1e-8)
      : BasicAdamState(std::span<const BasicParamTensor<T>>(params), b1, b2, epsilon) {}
};

using AdamState = BasicAdamState<float>;

template <typename T>
void adam_step(std::span<BasicParamTensor<T>> params, double lr, BasicAdamState<T>& state) {
  if (state.m.size() != params.size()) {
    throw ShapeError("adam state does not match param list");
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (!p.trainable) continue;
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (size_t e = 0; e < p.value.data.size(); ++e) {
      const double g = static_cast<double>(p.grad.data[e]);
      const double mn = state.beta1 * static_cast<double>(m.data[e]) + (1.0 - state.beta1) * g;
      const double vn = state.beta2 * static_cast<double>(v.data[e]) + (1.0 - state.beta2) * g * g;
      m.data[e] = static_cast<T>(mn);
      v.data[e] = static_cast<T>(vn);
      const double update = lr * (mn / bc1) / (std::sqrt(vn / bc2) + state.eps);
      p.value.data[e] = static_cast<T>(static_cast<double>(p.value.data[e]) - update);
      p.grad.data[e] = T(0);
    }
  }
}

}  // namespace fedgan
