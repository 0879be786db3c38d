// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "fovr/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace fovr::kernels {

void affine(const double* x, std::size_t n, std::size_t k, const double* w, const double* b,
            std::size_t m, double* y) {
  for (std::size_t i = 0; i < n; ++i) {
    double* yr = y + i * m;
    std::fill(yr, yr + m, 0.0);
    const double* xr = x + i * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double xv = xr[kk];
      if (xv == 0.0) continue;
      const double* wr = w + kk * m;
      for (std::size_t j = 0; j < m; ++j) yr[j] += xv * wr[j];
    }
    if (b != nullptr) {
      for (std::size_t j = 0; j < m; ++j) yr[j] += b[j];
    }
  }
}

void layer_norm(const double* x, std::size_t n, std::size_t d, const double* gain, const double* bias,
                double* y, double* xhat, double* inv_std) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* xr = x + i * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += xr[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = xr[j] - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + kLayerNormEps);
    double* yr = y + i * d;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (xr[j] - mean) * is;
      if (xhat != nullptr) xhat[i * d + j] = h;
      yr[j] = h * gain[j] + bias[j];
    }
    if (inv_std != nullptr) inv_std[i] = is;
  }
}

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
  const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
  return cdf + x * pdf;
}

void attend_row(const double* q, const double* keys, const double* values, std::size_t n_keys,
                const std::uint8_t* valid, std::size_t n_heads, std::size_t d, double* out,
                double* probs) {
  const std::size_t dh = d / n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::fill(out, out + d, 0.0);
  thread_local std::vector<double> scores;
  scores.assign(n_keys, 0.0);
  for (std::size_t h = 0; h < n_heads; ++h) {
    const std::size_t off = h * dh;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n_keys; ++j) {
      if (valid != nullptr && valid[j] == 0) continue;
      const double* kr = keys + j * d + off;
      double s = 0.0;
      for (std::size_t c = 0; c < dh; ++c) s += q[off + c] * kr[c];
      s *= scale;
      scores[j] = s;
      mx = std::max(mx, s);
    }
    double total = 0.0;
    for (std::size_t j = 0; j < n_keys; ++j) {
      if (valid != nullptr && valid[j] == 0) continue;
      scores[j] = std::exp(scores[j] - mx);
      total += scores[j];
    }
    double* o = out + off;
    for (std::size_t j = 0; j < n_keys; ++j) {
      if (valid != nullptr && valid[j] == 0) {
        if (probs != nullptr) probs[h * n_keys + j] = 0.0;
        continue;
      }
      const double p = scores[j] / total;
      if (probs != nullptr) probs[h * n_keys + j] = p;
      const double* vr = values + j * d + off;
      for (std::size_t c = 0; c < dh; ++c) o[c] += p * vr[c];
    }
  }
}

void log_softmax(std::span<const double> logits, std::span<double> out) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logits) mx = std::max(mx, v);
  double total = 0.0;
  for (double v : logits) total += std::exp(v - mx);
  const double lse = mx + std::log(total);
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
}

void softmax(std::span<const double> logits, std::span<double> out) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logits) mx = std::max(mx, v);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    total += out[i];
  }
  for (double& v : out) v /= total;
}

}  // namespace fovr::kernels
