// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "fovr/array.hpp"

namespace fovr {

/// Central-difference gradient (f(x+eps*e_i) - f(x-eps*e_i)) / (2*eps) for
/// every coordinate of x. Independent of the tape; used as a test oracle.
Array finite_diff_grad(const std::function<double(const Array&)>& f, const Array& x, double eps = 1e-4);

/// Same estimate restricted to the listed flat coordinates.
std::vector<double> finite_diff_grad_at(const std::function<double(const Array&)>& f, const Array& x,
                                        std::span<const std::size_t> coords, double eps = 1e-4);

/// |a - b| / max(|a|, |b|, floor). The floor keeps coordinates whose true
/// gradient is numerically zero from dominating the comparison.
double relative_error(double a, double b, double floor = 1e-6);

}  // namespace fovr
