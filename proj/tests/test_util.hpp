// Copyright 2026 The caecodec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "cae/rng.hpp"
#include "cae/tensor.hpp"

namespace cae::test {

inline Tensor<double> random_tensor(const Shape& shape, Rng& rng,
                                    double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(shape);
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

// Central finite-difference gradient of f with respect to every entry of x.
inline Tensor<double> numeric_gradient(const std::function<double()>& f,
                                       Tensor<double>& x, double h = 1e-5) {
  Tensor<double> grad(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double plus = f();
    x[i] = saved - h;
    const double minus = f();
    x[i] = saved;
    grad[i] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

// ||a - b|| / max(||a||, ||b||), zero when both vanish.
inline double relative_error(const Tensor<double>& a, const Tensor<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

}  // namespace cae::test
