#pragma once

// Dense row-major tensors. Training stores float32; the gradient-check
// oracle instantiates the same code with double. Binary ops require exact
// shape agreement (scalar-tensor ops are spelled out separately); nothing
// broadcasts silently.

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "fedgan/error.hpp"

namespace fedgan {

using Shape = std::vector<int>;

inline std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

inline size_t shape_numel(const Shape& s) {
  if (s.empty()) throw ShapeError("rank-0 shape not allowed");
  size_t n = 1;
  for (int d : s) {
    if (d < 1) throw ShapeError("non-positive dimension in " + shape_str(s));
    n *= static_cast<size_t>(d);
  }
  return n;
}

template <typename T>
struct BasicTensor {
  Shape shape;
  std::vector<T> data;

  BasicTensor() = default;

  // Zero-filled.
  explicit BasicTensor(Shape s) : shape(std::move(s)), data(shape_numel(shape), T(0)) {}

  // Validating: length must equal product(shape) and entries must be finite.
  BasicTensor(Shape s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != shape_numel(shape)) {
      throw ShapeError("data length " + std::to_string(data.size()) +
                       " does not match shape " + shape_str(shape));
    }
    for (T v : data) {
      if (!std::isfinite(static_cast<double>(v))) {
        throw ValueError("non-finite entry at construction");
      }
    }
  }

  size_t numel() const { return data.size(); }
  int rank() const { return static_cast<int>(shape.size()); }

  int dim(int i) const { return shape.at(static_cast<size_t>(i)); }

  int rows() const {
    if (rank() != 2) throw ShapeError("rows() on rank-" + std::to_string(rank()) + " tensor");
    return shape[0];
  }
  int cols() const {
    if (rank() != 2) throw ShapeError("cols() on rank-" + std::to_string(rank()) + " tensor");
    return shape[1];
  }

  T& at(int r, int c) { return data[static_cast<size_t>(r) * shape[1] + c]; }
  T at(int r, int c) const { return data[static_cast<size_t>(r) * shape[1] + c]; }

  bool same_shape(const BasicTensor& other) const { return shape == other.shape; }
};

template <typename T>
void check_finite(const BasicTensor<T>& t, const char* where) {
  for (T v : t.data) {
    if (!std::isfinite(static_cast<double>(v))) {
      throw ValueError(std::string("non-finite value in ") + where);
    }
  }
}

// Per-op finiteness audit; active only in debug builds.
template <typename T>
inline void debug_check_finite(const BasicTensor<T>& t, const char* where) {
#ifndef NDEBUG
  check_finite(t, where);
#else
  (void)t;
  (void)where;
#endif
}

// Trainable (or frozen) parameter: value plus same-shaped gradient buffer.
// trainable=false params still receive gradients from backward passes;
// optimizers skip them, which is what keeps a frozen generator frozen.
template <typename T>
struct BasicParamTensor {
  BasicTensor<T> value;
  BasicTensor<T> grad;
  bool trainable = true;

  BasicParamTensor() = default;
  explicit BasicParamTensor(BasicTensor<T> v, bool is_trainable = true)
      : value(std::move(v)), grad(value.shape), trainable(is_trainable) {}
};

using Tensor = BasicTensor<float>;
using ParamTensor = BasicParamTensor<float>;

template <typename U, typename T>
BasicTensor<U> tensor_cast(const BasicTensor<T>& t) {
  BasicTensor<U> out(t.shape);
  for (size_t i = 0; i < t.data.size(); ++i) out.data[i] = static_cast<U>(t.data[i]);
  return out;
}

// Gather rows by index into a fresh tensor (sampling with replacement).
template <typename T>
BasicTensor<T> gather_rows(const BasicTensor<T>& src, const std::vector<int>& idx) {
  const int n = static_cast<int>(idx.size());
  if (n == 0) throw ShapeError("gather_rows: empty index list");
  const int c = src.cols();
  BasicTensor<T> out({n, c});
  for (int r = 0; r < n; ++r) {
    const int s = idx[static_cast<size_t>(r)];
    if (s < 0 || s >= src.rows()) throw ShapeError("gather_rows: index out of range");
    for (int j = 0; j < c; ++j) out.at(r, j) = src.at(s, j);
  }
  return out;
}

}  // namespace fedgan
