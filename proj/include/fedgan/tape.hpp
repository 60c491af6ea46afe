#pragma once

// Reverse-mode autodiff over a flat tape. Forward ops append nodes in
// topological order; backward walks the tape in reverse and accumulates
// into each registered ParamTensor's grad buffer. Reductions accumulate
// in 64-bit regardless of the storage type.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedgan/error.hpp"
#include "fedgan/tensor.hpp"

namespace fedgan {

enum class Activation : uint8_t {
  linear = 0,
  relu = 1,
  leaky_relu = 2,  // fixed slope 0.2
  tanh = 3,
  sigmoid = 4,
};

constexpr double kLeakySlope = 0.2;

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

namespace detail {

template <typename T>
T sigmoid_stable(T x) {
  if (x >= T(0)) {
    return T(1) / (T(1) + std::exp(-x));
  }
  const T e = std::exp(x);
  return e / (T(1) + e);
}

// C += A * B, all rank-2, no aliasing.
template <typename T>
void mm_nn_acc(const BasicTensor<T>& a, const BasicTensor<T>& b, BasicTensor<T>& c) {
  const int n = a.rows(), k = a.cols(), m = b.cols();
  for (int i = 0; i < n; ++i) {
    const T* arow = &a.data[static_cast<size_t>(i) * k];
    T* crow = &c.data[static_cast<size_t>(i) * m];
    for (int p = 0; p < k; ++p) {
      const T av = arow[p];
      const T* brow = &b.data[static_cast<size_t>(p) * m];
      for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

// C += A * B^T  (A: n x k, B: m x k, C: n x m)
template <typename T>
void mm_nt_acc(const BasicTensor<T>& a, const BasicTensor<T>& b, BasicTensor<T>& c) {
  const int n = a.rows(), k = a.cols(), m = b.rows();
  for (int i = 0; i < n; ++i) {
    const T* arow = &a.data[static_cast<size_t>(i) * k];
    T* crow = &c.data[static_cast<size_t>(i) * m];
    for (int j = 0; j < m; ++j) {
      const T* brow = &b.data[static_cast<size_t>(j) * k];
      T acc = T(0);
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] += acc;
    }
  }
}

// C += A^T * B  (A: n x k, B: n x m, C: k x m)
template <typename T>
void mm_tn_acc(const BasicTensor<T>& a, const BasicTensor<T>& b, BasicTensor<T>& c) {
  const int n = a.rows(), k = a.cols(), m = b.cols();
  for (int i = 0; i < n; ++i) {
    const T* arow = &a.data[static_cast<size_t>(i) * k];
    const T* brow = &b.data[static_cast<size_t>(i) * m];
    for (int p = 0; p < k; ++p) {
      const T av = arow[p];
      T* crow = &c.data[static_cast<size_t>(p) * m];
      for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace detail

template <typename T>
class BasicTape {
 public:
  using TensorT = BasicTensor<T>;

  // Constant leaf; no gradient flows out of it.
  int input(TensorT v) {
    Node n;
    n.op = Op::input;
    n.value = std::move(v);
    return push(std::move(n));
  }

  // Parameter leaf bound to an external ParamTensor; backward accumulates
  // into p.grad whether or not p is trainable.
  int param(BasicParamTensor<T>& p) {
    if (!p.value.same_shape(p.grad)) throw ShapeError("param grad shape mismatch");
    Node n;
    n.op = Op::param;
    n.value = p.value;
    n.param = &p;
    return push(std::move(n));
  }

  int matmul(int a, int b) {
    const TensorT& av = value(a);
    const TensorT& bv = value(b);
    if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows()) {
      throw ShapeError("matmul " + shape_str(av.shape) + " x " + shape_str(bv.shape));
    }
    Node n;
    n.op = Op::matmul;
    n.a = a;
    n.b = b;
    n.value = TensorT({av.rows(), bv.cols()});
    detail::mm_nn_acc(av, bv, n.value);
    return push(std::move(n));
  }

  // Add a rank-1 bias to every row of a rank-2 tensor. The only rowwise op;
  // everything else requires exact shape equality.
  int add_row(int x, int bias) {
    const TensorT& xv = value(x);
    const TensorT& bv = value(bias);
    if (xv.rank() != 2 || bv.rank() != 1 || xv.cols() != bv.dim(0)) {
      throw ShapeError("add_row " + shape_str(xv.shape) + " + " + shape_str(bv.shape));
    }
    Node n;
    n.op = Op::add_row;
    n.a = x;
    n.b = bias;
    n.value = xv;
    for (int i = 0; i < xv.rows(); ++i)
      for (int j = 0; j < xv.cols(); ++j) n.value.at(i, j) += bv.data[static_cast<size_t>(j)];
    return push(std::move(n));
  }

  int add(int a, int b) { return binary(Op::add, a, b); }
  int sub(int a, int b) { return binary(Op::sub, a, b); }
  int mul(int a, int b) { return binary(Op::mul, a, b); }

  int scale(int a, T s) { return scalar_op(Op::scale, a, s); }
  int add_scalar(int a, T s) { return scalar_op(Op::add_scalar, a, s); }
  // s - x, elementwise.
  int rsub_scalar(T s, int a) { return scalar_op(Op::rsub_scalar, a, s); }

  // log(max(x, floor)); gradient is zero on the clamped side.
  int log_clamped(int a, T floor) {
    Node n;
    n.op = Op::log_clamped;
    n.a = a;
    n.scalar = floor;
    n.value = value(a);
    for (auto& v : n.value.data) v = std::log(v > floor ? v : floor);
    debug_check_finite(n.value, "log_clamped");
    return push(std::move(n));
  }

  int activation(int a, Activation f) {
    Node n;
    n.op = Op::activation;
    n.a = a;
    n.act = f;
    n.value = value(a);
    switch (f) {
      case Activation::linear:
        break;
      case Activation::relu:
        for (auto& v : n.value.data) v = v > T(0) ? v : T(0);
        break;
      case Activation::leaky_relu:
        for (auto& v : n.value.data) v = v > T(0) ? v : T(kLeakySlope) * v;
        break;
      case Activation::tanh:
        for (auto& v : n.value.data) v = std::tanh(v);
        break;
      case Activation::sigmoid:
        for (auto& v : n.value.data) v = detail::sigmoid_stable(v);
        break;
    }
    debug_check_finite(n.value, "activation");
    return push(std::move(n));
  }

  int sum(int a) { return reduce(Op::sum, a); }
  int mean(int a) { return reduce(Op::mean, a); }

  // Concatenate rank-2 tensors along the feature axis, in list order.
  int concat_cols(std::vector<int> parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no inputs");
    int rows = value(parts[0]).rows();
    int total = 0;
    for (int id : parts) {
      const TensorT& v = value(id);
      if (v.rank() != 2 || v.rows() != rows) {
        throw ShapeError("concat_cols: row mismatch " + shape_str(v.shape));
      }
      total += v.cols();
    }
    Node n;
    n.op = Op::concat_cols;
    n.parts = std::move(parts);
    n.value = TensorT({rows, total});
    int col = 0;
    for (int id : n.parts) {
      const TensorT& v = value(id);
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < v.cols(); ++j) n.value.at(i, col + j) = v.at(i, j);
      col += v.cols();
    }
    return push(std::move(n));
  }

  const TensorT& value(int id) const {
    check_id(id);
    return nodes_[static_cast<size_t>(id)].value;
  }

  size_t size() const { return nodes_.size(); }

  // Accumulates d(loss)/d(param) into every registered param's grad.
  void backward(int loss) {
    if (nodes_.empty()) throw Error("backward without forward: tape is empty");
    check_id(loss);
    if (nodes_[static_cast<size_t>(loss)].value.numel() != 1) {
      throw ShapeError("backward: loss must be scalar, got " +
                       shape_str(nodes_[static_cast<size_t>(loss)].value.shape));
    }
    std::vector<TensorT> grads(nodes_.size());
    grads[static_cast<size_t>(loss)] = TensorT(nodes_[static_cast<size_t>(loss)].value.shape);
    grads[static_cast<size_t>(loss)].data[0] = T(1);

    for (int i = loss; i >= 0; --i) {
      const TensorT& g = grads[static_cast<size_t>(i)];
      if (g.data.empty()) continue;
      const Node& n = nodes_[static_cast<size_t>(i)];
      switch (n.op) {
        case Op::input:
          break;
        case Op::param:
          for (size_t e = 0; e < g.data.size(); ++e) n.param->grad.data[e] += g.data[e];
          break;
        case Op::matmul: {
          detail::mm_nt_acc(g, nodes_[static_cast<size_t>(n.b)].value, ensure(grads, n.a));
          detail::mm_tn_acc(nodes_[static_cast<size_t>(n.a)].value, g, ensure(grads, n.b));
          break;
        }
        case Op::add_row: {
          TensorT& gx = ensure(grads, n.a);
          TensorT& gb = ensure(grads, n.b);
          for (size_t e = 0; e < g.data.size(); ++e) gx.data[e] += g.data[e];
          const int rows = g.rows(), cols = g.cols();
          for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) gb.data[static_cast<size_t>(c)] += g.at(r, c);
          break;
        }
        case Op::add: {
          accumulate(grads, n.a, g, T(1));
          accumulate(grads, n.b, g, T(1));
          break;
        }
        case Op::sub: {
          accumulate(grads, n.a, g, T(1));
          accumulate(grads, n.b, g, T(-1));
          break;
        }
        case Op::mul: {
          TensorT& ga = ensure(grads, n.a);
          TensorT& gb = ensure(grads, n.b);
          const TensorT& av = nodes_[static_cast<size_t>(n.a)].value;
          const TensorT& bv = nodes_[static_cast<size_t>(n.b)].value;
          for (size_t e = 0; e < g.data.size(); ++e) {
            ga.data[e] += g.data[e] * bv.data[e];
            gb.data[e] += g.data[e] * av.data[e];
          }
          break;
        }
        case Op::scale:
          accumulate(grads, n.a, g, n.scalar);
          break;
        case Op::add_scalar:
          accumulate(grads, n.a, g, T(1));
          break;
        case Op::rsub_scalar:
          accumulate(grads, n.a, g, T(-1));
          break;
        case Op::log_clamped: {
          TensorT& ga = ensure(grads, n.a);
          const TensorT& av = nodes_[static_cast<size_t>(n.a)].value;
          for (size_t e = 0; e < g.data.size(); ++e) {
            if (av.data[e] > n.scalar) ga.data[e] += g.data[e] / av.data[e];
          }
          break;
        }
        case Op::activation: {
          TensorT& ga = ensure(grads, n.a);
          const TensorT& av = nodes_[static_cast<size_t>(n.a)].value;
          const TensorT& yv = n.value;
          switch (n.act) {
            case Activation::linear:
              for (size_t e = 0; e < g.data.size(); ++e) ga.data[e] += g.data[e];
              break;
            case Activation::relu:
              for (size_t e = 0; e < g.data.size(); ++e)
                if (av.data[e] > T(0)) ga.data[e] += g.data[e];
              break;
            case Activation::leaky_relu:
              for (size_t e = 0; e < g.data.size(); ++e)
                ga.data[e] += g.data[e] * (av.data[e] > T(0) ? T(1) : T(kLeakySlope));
              break;
            case Activation::tanh:
              for (size_t e = 0; e < g.data.size(); ++e)
                ga.data[e] += g.data[e] * (T(1) - yv.data[e] * yv.data[e]);
              break;
            case Activation::sigmoid:
              for (size_t e = 0; e < g.data.size(); ++e)
                ga.data[e] += g.data[e] * yv.data[e] * (T(1) - yv.data[e]);
              break;
          }
          break;
        }
        case Op::sum: {
          TensorT& ga = ensure(grads, n.a);
          const T g0 = g.data[0];
          for (auto& v : ga.data) v += g0;
          break;
        }
        case Op::mean: {
          TensorT& ga = ensure(grads, n.a);
          const T g0 = g.data[0] / static_cast<T>(ga.numel());
          for (auto& v : ga.data) v += g0;
          break;
        }
        case Op::concat_cols: {
          int col = 0;
          for (int id : n.parts) {
            TensorT& gp = ensure(grads, id);
            const int pc = gp.cols();
            for (int r = 0; r < gp.rows(); ++r)
              for (int c = 0; c < pc; ++c) gp.at(r, c) += g.at(r, col + c);
            col += pc;
          }
          break;
        }
      }
    }
  }

 private:
  enum class Op : uint8_t {
    input,
    param,
    matmul,
    add_row,
    add,
    sub,
    mul,
    scale,
    add_scalar,
    rsub_scalar,
    log_clamped,
    activation,
    sum,
    mean,
    concat_cols,
  };

  struct Node {
    Op op = Op::input;
    int a = -1;
    int b = -1;
    std::vector<int> parts;
    T scalar{};
    Activation act = Activation::linear;
    TensorT value;
    BasicParamTensor<T>* param = nullptr;
  };

  int push(Node n) {
    debug_check_finite(n.value, "tape op");
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  void check_id(int id) const {
    if (id < 0 || static_cast<size_t>(id) >= nodes_.size()) {
      throw Error("tape: unknown node id " + std::to_string(id));
    }
  }

  int binary(Op op, int a, int b) {
    const TensorT& av = value(a);
    const TensorT& bv = value(b);
    if (!av.same_shape(bv)) {
      throw ShapeError("binary op " + shape_str(av.shape) + " vs " + shape_str(bv.shape));
    }
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.value = av;
    switch (op) {
      case Op::add:
        for (size_t e = 0; e < n.value.data.size(); ++e) n.value.data[e] += bv.data[e];
        break;
      case Op::sub:
        for (size_t e = 0; e < n.value.data.size(); ++e) n.value.data[e] -= bv.data[e];
        break;
      case Op::mul:
        for (size_t e = 0; e < n.value.data.size(); ++e) n.value.data[e] *= bv.data[e];
        break;
      default:
        throw Error("tape: bad binary op");
    }
    return push(std::move(n));
  }

  int scalar_op(Op op, int a, T s) {
    Node n;
    n.op = op;
    n.a = a;
    n.scalar = s;
    n.value = value(a);
    switch (op) {
      case Op::scale:
        for (auto& v : n.value.data) v *= s;
        break;
      case Op::add_scalar:
        for (auto& v : n.value.data) v += s;
        break;
      case Op::rsub_scalar:
        for (auto& v : n.value.data) v = s - v;
        break;
      default:
        throw Error("tape: bad scalar op");
    }
    return push(std::move(n));
  }

  // Reductions accumulate in double even when T is float.
  int reduce(Op op, int a) {
    const TensorT& av = value(a);
    double acc = 0.0;
    for (T v : av.data) acc += static_cast<double>(v);
    if (op == Op::mean) acc /= static_cast<double>(av.numel());
    Node n;
    n.op = op;
    n.a = a;
    n.value = TensorT({1});
    n.value.data[0] = static_cast<T>(acc);
    return push(std::move(n));
  }

  TensorT& ensure(std::vector<TensorT>& grads, int id) {
    TensorT& g = grads[static_cast<size_t>(id)];
    if (g.data.empty()) g = TensorT(nodes_[static_cast<size_t>(id)].value.shape);
    return g;
  }

  void accumulate(std::vector<TensorT>& grads, int id, const TensorT& g, T factor) {
    TensorT& dst = ensure(grads, id);
    for (size_t e = 0; e < g.data.size(); ++e) dst.data[e] += factor * g.data[e];
  }

  std::vector<Node> nodes_;
};

using Tape = BasicTape<float>;

}  // namespace fedgan
