// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "fovr/finite_diff.hpp"

#include <algorithm>
#include <cmath>

namespace fovr {

std::vector<double> finite_diff_grad_at(const std::function<double(const Array&)>& f, const Array& x,
                                        std::span<const std::size_t> coords, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite_diff_grad: eps must be positive");
  std::vector<double> out;
  out.reserve(coords.size());
  Array probe = x;
  for (std::size_t i : coords) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double up = f(probe);
    probe[i] = orig - eps;
    const double down = f(probe);
    probe[i] = orig;
    out.push_back((up - down) / (2.0 * eps));
  }
  return out;
}

Array finite_diff_grad(const std::function<double(const Array&)>& f, const Array& x, double eps) {
  std::vector<std::size_t> all(x.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return Array(x.shape(), finite_diff_grad_at(f, x, all, eps));
}

double relative_error(double a, double b, double floor) {
  const double denom = std::max({std::fabs(a), std::fabs(b), floor});
  return std::fabs(a - b) / denom;
}

}  // namespace fovr
