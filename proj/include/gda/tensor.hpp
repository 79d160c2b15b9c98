#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <vector>

#include "gda/mat.hpp"
#include "gda/sparse.hpp"

namespace gda {

namespace kernels {

// C = A(m x k) * B(k x n), row-major. ikj order so the inner loop streams
// contiguous rows of B and C.
template <typename T>
inline void matmul_nn(const T* __restrict a, const T* __restrict b, T* __restrict c,
                      std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    T* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] = T(0);
    const T* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = ai[p];
      const T* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

// C += A(m x k) * B^T(n x k): C[i][j] = dot(A_i, B_j).
template <typename T>
inline void matmul_nt_accum(const T* __restrict a, const T* __restrict b, T* __restrict c,
                            std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* ai = a + i * k;
    T* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const T* bj = b + j * k;
      T acc = T(0);
      for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] += acc;
    }
  }
}

// C += A^T(k x m) * B(k x n): scatter over A's rows.
template <typename T>
inline void matmul_tn_accum(const T* __restrict a, const T* __restrict b, T* __restrict c,
                            std::size_t k, std::size_t m, std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    const T* ap = a + p * m;
    const T* bp = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const T api = ap[i];
      T* ci = c + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

}  // namespace kernels

template <typename T>
struct TensorData {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> value;
  std::vector<T> grad;  // empty until first accumulation
  bool requires_grad = false;
};

/// Shared handle to a dense matrix participating in reverse-mode autodiff.
/// Copies alias the same storage.
template <typename T>
class Tensor {
 public:
  Tensor() : d_(std::make_shared<TensorData<T>>()) {}

  Tensor(std::size_t rows, std::size_t cols, bool requires_grad = false)
      : d_(std::make_shared<TensorData<T>>()) {
    d_->rows = rows;
    d_->cols = cols;
    d_->value.assign(rows * cols, T(0));
    d_->requires_grad = requires_grad;
  }

  template <typename U>
  static Tensor from_mat(const Mat<U>& m, bool requires_grad = false) {
    Tensor t(m.rows, m.cols, requires_grad);
    for (std::size_t i = 0; i < m.v.size(); ++i) t.d_->value[i] = static_cast<T>(m.v[i]);
    return t;
  }

  std::size_t rows() const { return d_->rows; }
  std::size_t cols() const { return d_->cols; }
  std::size_t size() const { return d_->value.size(); }
  bool requires_grad() const { return d_->requires_grad; }
  bool is_scalar() const { return d_->rows == 1 && d_->cols == 1; }

  std::vector<T>& value() { return d_->value; }
  const std::vector<T>& value() const { return d_->value; }
  T& operator()(std::size_t r, std::size_t c) { return d_->value[r * d_->cols + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return d_->value[r * d_->cols + c]; }
  T scalar() const {
    if (!is_scalar()) throw std::logic_error("tensor is not scalar");
    return d_->value[0];
  }

  bool has_grad() const { return !d_->grad.empty(); }
  std::vector<T>& grad() {
    ensure_grad();
    return d_->grad;
  }
  const std::vector<T>& grad_view() const { return d_->grad; }

  void ensure_grad() {
    if (d_->grad.empty()) d_->grad.assign(d_->value.size(), T(0));
  }
  void zero_grad() {
    if (!d_->grad.empty()) std::fill(d_->grad.begin(), d_->grad.end(), T(0));
  }

  Mat<T> to_mat() const {
    Mat<T> m(d_->rows, d_->cols);
    m.v = d_->value;
    return m;
  }

  bool same_storage(const Tensor& o) const { return d_ == o.d_; }

 private:
  std::shared_ptr<TensorData<T>> d_;
};

/// Records one operation per forward call; backward replays in reverse and
/// accumulates additively at fan-out. One backward per forward pass; the
/// node list is cleared afterwards.
template <typename T>
class Tape {
 public:
  using Rng = std::mt19937;

  void push(std::function<void()> backward_fn) { nodes_.push_back(std::move(backward_fn)); }

  std::size_t num_nodes() const { return nodes_.size(); }

  Tensor<T> matmul(Tensor<T> a, Tensor<T> b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matmul: shape mismatch");
    Tensor<T> out(a.rows(), b.cols(), needs_grad(a, b));
    kernels::matmul_nn(a.value().data(), b.value().data(), out.value().data(), a.rows(), a.cols(),
                       b.cols());
    if (out.requires_grad())
      push([a, b, out]() mutable {
        if (!out.has_grad()) return;
        const T* g = out.grad_view().data();
        if (a.requires_grad())
          kernels::matmul_nt_accum(g, b.value().data(), a.grad().data(), a.rows(), b.cols(),
                                   a.cols());
        if (b.requires_grad())
          kernels::matmul_tn_accum(a.value().data(), g, b.grad().data(), a.rows(), a.cols(),
                                   b.cols());
      });
    return out;
  }

  Tensor<T> add(Tensor<T> a, Tensor<T> b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("add: shape mismatch");
    Tensor<T> out(a.rows(), a.cols(), needs_grad(a, b));
    for (std::size_t i = 0; i < a.size(); ++i) out.value()[i] = a.value()[i] + b.value()[i];
    if (out.requires_grad())
      push([a, b, out]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad_view();
        if (a.requires_grad())
          for (std::size_t i = 0; i < g.size(); ++i) a.grad()[i] += g[i];
        if (b.requires_grad())
          for (std::size_t i = 0; i < g.size(); ++i) b.grad()[i] += g[i];
      });
    return out;
  }

  /// a + row vector bias (1 x cols), broadcast over rows.
  Tensor<T> add_rowvec(Tensor<T> a, Tensor<T> v) {
    if (v.rows() != 1 || v.cols() != a.cols())
      throw std::invalid_argument("add_rowvec: bias must be 1 x cols");
    Tensor<T> out(a.rows(), a.cols(), needs_grad(a, v));
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < a.cols(); ++j)
        out(i, j) = a(i, j) + v.value()[j];
    if (out.requires_grad())
      push([a, v, out]() mutable {
        if (!out.has_grad()) return;
        const T* g = out.grad_view().data();
        if (a.requires_grad())
          for (std::size_t i = 0; i < a.size(); ++i) a.grad()[i] += g[i];
        if (v.requires_grad())
          for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t j = 0; j < a.cols(); ++j) v.grad()[j] += g[i * a.cols() + j];
      });
    return out;
  }

  Tensor<T> relu(Tensor<T> x) {
    Tensor<T> out(x.rows(), x.cols(), x.requires_grad());
    for (std::size_t i = 0; i < x.size(); ++i) out.value()[i] = x.value()[i] > T(0) ? x.value()[i] : T(0);
    if (out.requires_grad())
      push([x, out]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad_view();
        for (std::size_t i = 0; i < g.size(); ++i)
          if (x.value()[i] > T(0)) x.grad()[i] += g[i];
      });
    return out;
  }

  Tensor<T> sigmoid(Tensor<T> x) {
    Tensor<T> out(x.rows(), x.cols(), x.requires_grad());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const T v = x.value()[i];
      out.value()[i] = v >= T(0) ? T(1) / (T(1) + std::exp(-v))
                                 : std::exp(v) / (T(1) + std::exp(v));
    }
    if (out.requires_grad())
      push([x, out]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad_view();
        for (std::size_t i = 0; i < g.size(); ++i) {
          const T y = out.value()[i];
          x.grad()[i] += g[i] * y * (T(1) - y);
        }
      });
    return out;
  }

  Tensor<T> hadamard(Tensor<T> a, Tensor<T> b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
      throw std::invalid_argument("hadamard: shape mismatch");
    Tensor<T> out(a.rows(), a.cols(), needs_grad(a, b));
    for (std::size_t i = 0; i < a.size(); ++i) out.value()[i] = a.value()[i] * b.value()[i];
    if (out.requires_grad())
      push([a, b, out]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad_view();
        if (a.requires_grad())
          for (std::size_t i = 0; i < g.size(); ++i) a.grad()[i] += g[i] * b.value()[i];
        if (b.requires_grad())
          for (std::size_t i = 0; i < g.size(); ++i) b.grad()[i] += g[i] * a.value()[i];
      });
    return out;
  }

  /// Selects rows of x; backward scatter-adds into the gathered rows.
  Tensor<T> row_gather(Tensor<T> x, const std::vector<int>& indices) {
    for (int r : indices)
      if (r < 0 || r >= static_cast<int>(x.rows()))
        throw std::invalid_argument("row_gather: index out of range");
    Tensor<T> out(indices.size(), x.cols(), x.requires_grad());
    for (std::size_t i = 0; i < indices.size(); ++i)
      for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(indices[i], j);
    if (out.requires_grad())
      push([x, out, indices]() mutable {
        if (!out.has_grad()) return;
        const T* g = out.grad_view().data();
        const std::size_t c = x.cols();
        for (std::size_t i = 0; i < indices.size(); ++i) {
          T* dst = x.grad().data() + static_cast<std::size_t>(indices[i]) * c;
          for (std::size_t j = 0; j < c; ++j) dst[j] += g[i * c + j];
        }
      });
    return out;
  }

  Tensor<T> concat_cols(Tensor<T> a, Tensor<T> b) {
    if (a.rows() != b.rows()) throw std::invalid_argument("concat_cols: row mismatch");
    Tensor<T> out(a.rows(), a.cols() + b.cols(), needs_grad(a, b));
    for (std::size_t i = 0; i < a.rows(); ++i) {
      for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, a.cols() + j) = b(i, j);
    }
    if (out.requires_grad())
      push([a, b, out]() mutable {
        if (!out.has_grad()) return;
        const std::size_t ca = a.cols(), cb = b.cols();
        for (std::size_t i = 0; i < a.rows(); ++i)
          for (std::size_t j = 0; j < ca; ++j)
            if (a.requires_grad()) a.grad()[i * ca + j] += out.grad_view()[i * (ca + cb) + j];
        for (std::size_t i = 0; i < b.rows(); ++i)
          for (std::size_t j = 0; j < cb; ++j)
            if (b.requires_grad()) b.grad()[i * cb + j] += out.grad_view()[i * (ca + cb) + ca + j];
      });
    return out;
  }

  /// Inverted dropout: keeps entries with probability 1-p and scales by
  /// 1/(1-p). Identity in eval mode and at p == 0 (no rng draws either way
  /// beyond the kept-mask draws in training).
  Tensor<T> dropout(Tensor<T> x, double p, Rng& rng, bool training) {
    if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: p must lie in [0,1)");
    if (!training || p == 0.0) return x;
    const T scale = static_cast<T>(1.0 / (1.0 - p));
    auto mask = std::make_shared<std::vector<T>>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      (*mask)[i] = uniform01(rng) >= p ? scale : T(0);
    Tensor<T> out(x.rows(), x.cols(), x.requires_grad());
    for (std::size_t i = 0; i < x.size(); ++i) out.value()[i] = x.value()[i] * (*mask)[i];
    if (out.requires_grad())
      push([x, out, mask]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad_view();
        for (std::size_t i = 0; i < g.size(); ++i) x.grad()[i] += g[i] * (*mask)[i];
      });
    return out;
  }

  /// Sparse-dense product. The sparse structure is a constant; backward
  /// pushes the transposed operator through the dense operand only. The
  /// operator is copied into the node so it may outlive the caller's local.
  Tensor<T> spmm(const SparseOp<T>& op, Tensor<T> x) {
    if (op.cols != static_cast<int>(x.rows())) throw std::invalid_argument("spmm: shape mismatch");
    Tensor<T> out(op.rows, x.cols(), x.requires_grad());
    sparse_apply(op, x.value().data(), x.cols(), out.value().data());
    if (out.requires_grad()) {
      auto held = std::make_shared<const SparseOp<T>>(op);
      push([held, x, out]() mutable {
        if (!out.has_grad()) return;
        sparse_apply_transpose_accum(*held, out.grad_view().data(), x.cols(), x.grad().data());
      });
    }
    return out;
  }

  Tensor<T> scale(Tensor<T> x, T c) {
    Tensor<T> out(x.rows(), x.cols(), x.requires_grad());
    for (std::size_t i = 0; i < x.size(); ++i) out.value()[i] = x.value()[i] * c;
    if (out.requires_grad())
      push([x, out, c]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad_view();
        for (std::size_t i = 0; i < g.size(); ++i) x.grad()[i] += g[i] * c;
      });
    return out;
  }

  Tensor<T> sum(Tensor<T> x) {
    Tensor<T> out(1, 1, x.requires_grad());
    T acc = T(0);
    for (T v : x.value()) acc += v;
    out.value()[0] = acc;
    if (out.requires_grad())
      push([x, out]() mutable {
        if (!out.has_grad()) return;
        const T g = out.grad_view()[0];
        for (std::size_t i = 0; i < x.size(); ++i) x.grad()[i] += g;
      });
    return out;
  }

  /// Mean negative log softmax probability of the true class over the masked
  /// rows. Stabilized by row-max subtraction.
  Tensor<T> cross_entropy_onehot(Tensor<T> logits, const std::vector<int>& labels,
                                 const std::vector<int>& mask_rows) {
    if (mask_rows.empty()) throw std::invalid_argument("cross_entropy_onehot: empty mask");
    const std::size_t c = logits.cols();
    for (int r : mask_rows) {
      if (r < 0 || r >= static_cast<int>(logits.rows()))
        throw std::invalid_argument("cross_entropy_onehot: mask row out of range");
      if (labels[r] < 0 || labels[r] >= static_cast<int>(c))
        throw std::invalid_argument("cross_entropy_onehot: label out of range for masked row");
    }
    auto probs = std::make_shared<std::vector<T>>(mask_rows.size() * c);
    T loss = T(0);
    for (std::size_t i = 0; i < mask_rows.size(); ++i) {
      const T* row = logits.value().data() + static_cast<std::size_t>(mask_rows[i]) * c;
      T mx = row[0];
      for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
      T denom = T(0);
      for (std::size_t j = 0; j < c; ++j) denom += std::exp(row[j] - mx);
      const T log_denom = std::log(denom);
      for (std::size_t j = 0; j < c; ++j) (*probs)[i * c + j] = std::exp(row[j] - mx) / denom;
      loss += log_denom - (row[labels[mask_rows[i]]] - mx);
    }
    Tensor<T> out(1, 1, logits.requires_grad());
    out.value()[0] = loss / static_cast<T>(mask_rows.size());
    if (out.requires_grad())
      push([logits, out, probs, labels, mask_rows]() mutable {
        if (!out.has_grad()) return;
        const std::size_t c = logits.cols();
        const T g = out.grad_view()[0] / static_cast<T>(mask_rows.size());
        for (std::size_t i = 0; i < mask_rows.size(); ++i) {
          T* dst = logits.grad().data() + static_cast<std::size_t>(mask_rows[i]) * c;
          const int y = labels[mask_rows[i]];
          for (std::size_t j = 0; j < c; ++j)
            dst[j] += g * ((*probs)[i * c + j] - (static_cast<int>(j) == y ? T(1) : T(0)));
        }
      });
    return out;
  }

  /// Binary cross-entropy on probabilities; scores are clamped to
  /// [eps, 1-eps] with eps = 1e-7 before the logs.
  Tensor<T> bce_from_scores(Tensor<T> scores, const std::vector<int>& targets) {
    if (scores.size() != targets.size())
      throw std::invalid_argument("bce_from_scores: target count mismatch");
    if (targets.empty()) throw std::invalid_argument("bce_from_scores: empty input");
    const T eps = static_cast<T>(1e-7);
    const T lo = eps, hi = T(1) - eps;
    auto clamped = std::make_shared<std::vector<T>>(scores.size());
    T loss = T(0);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      T s = scores.value()[i];
      s = s < lo ? lo : (s > hi ? hi : s);
      (*clamped)[i] = s;
      loss -= targets[i] ? std::log(s) : std::log(T(1) - s);
    }
    Tensor<T> out(1, 1, scores.requires_grad());
    out.value()[0] = loss / static_cast<T>(scores.size());
    if (out.requires_grad())
      push([scores, out, clamped, targets]() mutable {
        if (!out.has_grad()) return;
        const T g = out.grad_view()[0] / static_cast<T>(scores.size());
        for (std::size_t i = 0; i < scores.size(); ++i) {
          const T s = (*clamped)[i];
          const T t = targets[i] ? T(1) : T(0);
          scores.grad()[i] += g * (s - t) / (s * (T(1) - s));
        }
      });
    return out;
  }

  /// Seeds d(loss)/d(loss) = 1, replays the tape in reverse, then clears it.
  void backward(const Tensor<T>& loss) {
    if (!loss.is_scalar()) throw std::invalid_argument("backward: loss must be scalar");
    Tensor<T> l = loss;
    l.grad()[0] += T(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
    nodes_.clear();
  }

  void clear() { nodes_.clear(); }

 private:
  static bool needs_grad(Tensor<T> a, Tensor<T> b) {
    return a.requires_grad() || b.requires_grad();
  }

  std::vector<std::function<void()>> nodes_;
};

}  // namespace gda
