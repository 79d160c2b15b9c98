#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "gda/tensor.hpp"

namespace gda {

/// Per-pass knobs shared by every forward method. Dropout is only active
/// when training is set and requires an rng.
struct ForwardCtx {
  bool training = false;
  double dropout_p = 0.0;
  std::mt19937* rng = nullptr;
};

inline ForwardCtx eval_ctx() { return ForwardCtx{}; }

template <typename T>
Tensor<T> apply_dropout(Tape<T>& tape, const Tensor<T>& x, const ForwardCtx& ctx) {
  if (!ctx.training || ctx.dropout_p == 0.0) return x;
  if (!ctx.rng) throw std::logic_error("dropout requested without rng");
  return tape.dropout(x, ctx.dropout_p, *ctx.rng, true);
}

/// Glorot uniform: entries drawn from U(-a, a), a = sqrt(6 / (fan_in + fan_out)).
template <typename T>
Tensor<T> glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937& rng) {
  Tensor<T> w(fan_in, fan_out, true);
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : w.value()) v = static_cast<T>((2.0 * uniform01(rng) - 1.0) * a);
  return w;
}

template <typename T>
struct Linear {
  Tensor<T> w;  // in x out
  Tensor<T> b;  // 1 x out

  Linear() = default;
  Linear(std::size_t in, std::size_t out, std::mt19937& rng)
      : w(glorot_uniform<T>(in, out, rng)), b(1, out, true) {}

  Tensor<T> forward(Tape<T>& tape, const Tensor<T>& x) const {
    return tape.add_rowvec(tape.matmul(x, w), b);
  }

  std::size_t in_dim() const { return w.rows(); }
  std::size_t out_dim() const { return w.cols(); }

  void collect(std::vector<Tensor<T>>& out) const {
    out.push_back(w);
    out.push_back(b);
  }
};

/// Two-layer perceptron: linear, relu, dropout, linear.
template <typename T>
struct Mlp2 {
  Linear<T> l1, l2;

  Mlp2() = default;
  Mlp2(std::size_t in, std::size_t hidden, std::size_t out, std::mt19937& rng)
      : l1(in, hidden, rng), l2(hidden, out, rng) {}

  Tensor<T> forward(Tape<T>& tape, const Tensor<T>& x, const ForwardCtx& ctx) const {
    Tensor<T> h = apply_dropout(tape, tape.relu(l1.forward(tape, x)), ctx);
    return l2.forward(tape, h);
  }

  std::size_t in_dim() const { return l1.in_dim(); }
  std::size_t hidden_dim() const { return l1.out_dim(); }
  std::size_t out_dim() const { return l2.out_dim(); }

  void collect(std::vector<Tensor<T>>& out) const {
    l1.collect(out);
    l2.collect(out);
  }
};

}  // namespace gda
