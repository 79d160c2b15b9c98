#pragma once

#include <cmath>
#include <stdexcept>

#include "gda/graph.hpp"

namespace gda {

enum class NormMode { sym_selfloop, row_mean };

/// Weighted CSR operator. Structure is constant: it never participates in
/// differentiation, gradients flow only through dense operands.
template <typename T>
struct SparseOp {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_ptr{0};
  std::vector<int> col_idx;
  std::vector<T> vals;
};

/// dst = op * src for row-major dense src (src_rows x src_cols).
template <typename T>
inline void sparse_apply(const SparseOp<T>& op, const T* src, std::size_t src_cols, T* dst) {
  for (int i = 0; i < op.rows; ++i) {
    T* out = dst + static_cast<std::size_t>(i) * src_cols;
    for (std::size_t j = 0; j < src_cols; ++j) out[j] = T(0);
    for (int k = op.row_ptr[i]; k < op.row_ptr[i + 1]; ++k) {
      const T w = op.vals[k];
      const T* in = src + static_cast<std::size_t>(op.col_idx[k]) * src_cols;
      for (std::size_t j = 0; j < src_cols; ++j) out[j] += w * in[j];
    }
  }
}

/// dst += op^T * src, computed by scattering op's rows. Used for backward.
template <typename T>
inline void sparse_apply_transpose_accum(const SparseOp<T>& op, const T* src, std::size_t src_cols,
                                         T* dst) {
  for (int i = 0; i < op.rows; ++i) {
    const T* in = src + static_cast<std::size_t>(i) * src_cols;
    for (int k = op.row_ptr[i]; k < op.row_ptr[i + 1]; ++k) {
      const T w = op.vals[k];
      T* out = dst + static_cast<std::size_t>(op.col_idx[k]) * src_cols;
      for (std::size_t j = 0; j < src_cols; ++j) out[j] += w * in[j];
    }
  }
}

template <typename T>
inline Mat<T> sparse_apply(const SparseOp<T>& op, const Mat<T>& src) {
  if (op.cols != static_cast<int>(src.rows)) throw std::invalid_argument("sparse_apply: shape mismatch");
  Mat<T> out(op.rows, src.cols);
  sparse_apply(op, src.v.data(), src.cols, out.v.data());
  return out;
}

/// sym_selfloop: D~^{-1/2} (A + I) D~^{-1/2} with D~ counting the self-loop.
/// row_mean: D^{-1} A; isolated nodes get an all-zero row.
template <typename T>
inline SparseOp<T> normalized_adjacency(const Csr& adj, NormMode mode) {
  SparseOp<T> op;
  op.rows = op.cols = adj.num_nodes;
  op.row_ptr.assign(1, 0);

  if (mode == NormMode::row_mean) {
    op.col_idx = adj.col_idx;
    op.vals.resize(adj.nnz());
    for (int u = 0; u < adj.num_nodes; ++u) {
      const int deg = adj.degree(u);
      const T w = deg > 0 ? T(1) / static_cast<T>(deg) : T(0);
      for (int k = adj.row_ptr[u]; k < adj.row_ptr[u + 1]; ++k) op.vals[k] = w;
      op.row_ptr.push_back(adj.row_ptr[u + 1]);
    }
    return op;
  }

  std::vector<double> dinv_sqrt(adj.num_nodes);
  for (int u = 0; u < adj.num_nodes; ++u) dinv_sqrt[u] = 1.0 / std::sqrt(adj.degree(u) + 1.0);
  for (int u = 0; u < adj.num_nodes; ++u) {
    bool diag_emitted = false;
    auto emit_diag = [&] {
      op.col_idx.push_back(u);
      op.vals.push_back(static_cast<T>(dinv_sqrt[u] * dinv_sqrt[u]));
      diag_emitted = true;
    };
    for (int k = adj.row_ptr[u]; k < adj.row_ptr[u + 1]; ++k) {
      const int v = adj.col_idx[k];
      if (!diag_emitted && v > u) emit_diag();
      op.col_idx.push_back(v);
      op.vals.push_back(static_cast<T>(dinv_sqrt[u] * dinv_sqrt[v]));
    }
    if (!diag_emitted) emit_diag();
    op.row_ptr.push_back(static_cast<int>(op.col_idx.size()));
  }
  return op;
}

template <typename T>
inline SparseOp<T> normalized_adjacency(const Graph& g, NormMode mode) {
  return normalized_adjacency<T>(g.adj, mode);
}

}  // namespace gda
