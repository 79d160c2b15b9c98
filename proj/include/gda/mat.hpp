#pragma once

#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

namespace gda {

/// Dense row-major matrix. Plain data, no gradient machinery.
template <typename T>
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> v;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, T fill = T(0)) : rows(r), cols(c), v(r * c, fill) {}

  T& operator()(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return v[r * cols + c]; }

  T* row(std::size_t r) { return v.data() + r * cols; }
  const T* row(std::size_t r) const { return v.data() + r * cols; }

  std::vector<T> row_copy(std::size_t r) const { return {row(r), row(r) + cols}; }

  template <typename U>
  Mat<U> cast() const {
    Mat<U> out(rows, cols);
    for (std::size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
    return out;
  }
};

/// Uniform real in [0,1). Explicit so every draw site is stream-stable.
template <typename Rng>
inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

/// Uniform integer in [0, n).
template <typename Rng>
inline int uniform_below(Rng& rng, int n) {
  if (n <= 0) throw std::invalid_argument("uniform_below: n must be positive");
  return std::uniform_int_distribution<int>(0, n - 1)(rng);
}

}  // namespace gda
