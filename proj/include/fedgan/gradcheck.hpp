#pragma once

// Finite-difference gradient verification. The analytic side is the tape's
// reverse pass; the numeric side re-evaluates the forward value at
// param +/- eps and takes centered differences. Instantiate with T=double
// so the numeric side is trustworthy; the same templated op code is what
// float32 training runs.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>

#include "fedgan/tape.hpp"
#include "fedgan/tensor.hpp"

namespace fedgan {

// build_loss must construct a scalar loss on the given tape, reading (and
// registering) the supplied params. Returns the max relative error
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8) over all
// parameter entries.
template <typename T>
double grad_check(const std::function<int(BasicTape<T>&)>& build_loss,
                  std::span<BasicParamTensor<T>> params, double eps) {
  for (auto& p : params) p.grad = BasicTensor<T>(p.grad.shape);
  {
    BasicTape<T> tape;
    tape.backward(build_loss(tape));
  }
  std::vector<BasicTensor<T>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(p.grad);

  auto eval = [&]() {
    BasicTape<T> tape;
    return static_cast<double>(tape.value(build_loss(tape)).data[0]);
  };

  double max_err = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    for (size_t e = 0; e < p.value.data.size(); ++e) {
      const T saved = p.value.data[e];
      p.value.data[e] = static_cast<T>(static_cast<double>(saved) + eps);
      const double fp = eval();
      p.value.data[e] = static_cast<T>(static_cast<double>(saved) - eps);
      const double fm = eval();
      p.value.data[e] = saved;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = static_cast<double>(analytic[pi].data[e]);
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      max_err = std::max(max_err, std::abs(a - numeric) / denom);
    }
  }
  return max_err;
}

}  // namespace fedgan
