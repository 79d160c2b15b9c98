#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "gda/tensor.hpp"

namespace gda {

enum class OptKind { sgd, adam };

/// SGD or Adam with decoupled weight decay: the decay shrink is applied to
/// the parameter before the gradient-based update, so it never enters the
/// Adam moment estimates. step() consumes and zeroes the gradients.
template <typename T>
class Optimizer {
 public:
  Optimizer(OptKind kind, T lr, T weight_decay)
      : kind_(kind), lr_(lr), wd_(weight_decay) {
    if (lr <= T(0)) throw std::invalid_argument("optimizer: learning rate must be positive");
    if (weight_decay < T(0)) throw std::invalid_argument("optimizer: weight decay must be nonnegative");
  }

  long steps() const { return step_; }

  void step(std::vector<Tensor<T>>& params) {
    if (m_.empty() && kind_ == OptKind::adam) {
      m_.resize(params.size());
      v_.resize(params.size());
      for (std::size_t p = 0; p < params.size(); ++p) {
        m_[p].assign(params[p].size(), T(0));
        v_[p].assign(params[p].size(), T(0));
      }
    }
    ++step_;
    const T bc1 = T(1) - std::pow(beta1_, static_cast<T>(step_));
    const T bc2 = T(1) - std::pow(beta2_, static_cast<T>(step_));
    for (std::size_t p = 0; p < params.size(); ++p) {
      auto& val = params[p].value();
      params[p].ensure_grad();
      auto& g = params[p].grad();
      if (wd_ != T(0))
        for (std::size_t i = 0; i < val.size(); ++i) val[i] -= lr_ * wd_ * val[i];
      if (kind_ == OptKind::sgd) {
        for (std::size_t i = 0; i < val.size(); ++i) val[i] -= lr_ * g[i];
      } else {
        auto& m = m_[p];
        auto& v = v_[p];
        if (m.size() != val.size()) throw std::logic_error("optimizer: parameter shape changed");
        for (std::size_t i = 0; i < val.size(); ++i) {
          m[i] = beta1_ * m[i] + (T(1) - beta1_) * g[i];
          v[i] = beta2_ * v[i] + (T(1) - beta2_) * g[i] * g[i];
          const T mhat = m[i] / bc1;
          const T vhat = v[i] / bc2;
          val[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
      }
      params[p].zero_grad();
    }
  }

 private:
  OptKind kind_;
  T lr_, wd_;
  T beta1_ = static_cast<T>(0.9);
  T beta2_ = static_cast<T>(0.999);
  T eps_ = static_cast<T>(1e-8);
  long step_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

inline OptKind parse_opt_kind(const std::string& s) {
  if (s == "sgd") return OptKind::sgd;
  if (s == "adam") return OptKind::adam;
  throw std::invalid_argument("unknown optimizer: " + s);
}

inline const char* opt_kind_name(OptKind k) { return k == OptKind::sgd ? "sgd" : "adam"; }

}  // namespace gda
