#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "gda/tensor.hpp"

namespace gda {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
  std::size_t worst_param = 0;
  std::size_t worst_coord = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Central-difference check of the analytic gradients produced by `forward`.
/// Runs in double regardless of the model's training precision. At most
/// `max_coords_per_param` coordinates per parameter are probed, chosen by a
/// seeded shuffle so large parameters stay affordable.
///
/// Relative error uses max(1, |fd|, |analytic|) in the denominator, which
/// behaves like an absolute tolerance near zero.
inline GradCheckReport finite_difference_check(
    std::vector<Tensor<double>>& params,
    const std::function<Tensor<double>(Tape<double>&)>& forward, double h = 1e-5,
    std::size_t max_coords_per_param = 200, std::uint32_t seed = 0) {
  for (auto& p : params) p.zero_grad();
  {
    Tape<double> tape;
    Tensor<double> loss = forward(tape);
    tape.backward(loss);
  }
  std::vector<std::vector<double>> analytic(params.size());
  for (std::size_t p = 0; p < params.size(); ++p) {
    params[p].ensure_grad();
    analytic[p] = params[p].grad_view();
    params[p].zero_grad();
  }

  auto eval = [&]() {
    Tape<double> tape;
    Tensor<double> loss = forward(tape);
    tape.clear();
    return static_cast<double>(loss.scalar());
  };

  std::mt19937 rng(seed);
  GradCheckReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    std::vector<std::size_t> coords(params[p].size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (coords.size() > max_coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(max_coords_per_param);
    }
    auto& val = params[p].value();
    for (std::size_t c : coords) {
      const double orig = val[c];
      val[c] = orig + h;
      const double lp = eval();
      val[c] = orig - h;
      const double lm = eval();
      val[c] = orig;
      const double fd = (lp - lm) / (2.0 * h);
      const double an = analytic[p][c];
      const double rel = std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
      ++report.coords_checked;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = p;
        report.worst_coord = c;
        report.worst_analytic = an;
        report.worst_numeric = fd;
      }
    }
  }
  return report;
}

}  // namespace gda
