// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Row kernels shared by the differentiable graph and the cached decoder.
// Every row of an output depends only on the matching input row and the
// loop order is fixed, so batched and row-at-a-time evaluation agree bitwise.

#include <cstddef>
#include <cstdint>
#include <span>

namespace fovr::kernels {

inline constexpr double kLayerNormEps = 1e-5;

// y[n,m] = x[n,k] * w[k,m] (+ b[m] if non-null, added after the product).
void affine(const double* x, std::size_t n, std::size_t k, const double* w, const double* b,
            std::size_t m, double* y);

// Normalizes each of the n rows (width d) then applies gain/bias. Optionally
// stores the per-row normalized values and inverse std for backward.
void layer_norm(const double* x, std::size_t n, std::size_t d, const double* gain, const double* bias,
                double* y, double* xhat = nullptr, double* inv_std = nullptr);

double gelu(double x);
double gelu_grad(double x);

// Multi-head attention for one query row over `n_keys` cached rows. Keys whose
// `valid` flag is zero are skipped entirely. When `probs` is non-null it
// receives n_heads * n_keys weights (zero for skipped keys).
void attend_row(const double* q, const double* keys, const double* values, std::size_t n_keys,
                const std::uint8_t* valid, std::size_t n_heads, std::size_t d, double* out,
                double* probs = nullptr);

// log-softmax of one row; entries equal to the lowest double contribute 0 mass.
void log_softmax(std::span<const double> logits, std::span<double> out);
void softmax(std::span<const double> logits, std::span<double> out);

}  // namespace fovr::kernels
