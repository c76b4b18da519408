#pragma once

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace testutil {

template <typename T>
void fill_uniform(cet::Tensor<T>& t, cet::Rng& rng, double lo = -1.0, double hi = 1.0) {
  T* p = t.data();
  const std::int64_t n = t.numel();
  for (std::int64_t i = 0; i < n; ++i) p[i] = static_cast<T>(rng.uniform(lo, hi));
}

template <typename T>
cet::Tensor<T> rand_tensor(cet::Rng& rng, const cet::Shape4& s, double lo = -1.0,
                           double hi = 1.0) {
  cet::Tensor<T> t = cet::Tensor<T>::zeros(s);
  fill_uniform(t, rng, lo, hi);
  return t;
}

// Error metric used by all gradient checks: absolute for small magnitudes,
// relative above 1.
inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

template <typename T>
double max_abs_diff(const cet::Tensor<T>& a, const cet::Tensor<T>& b) {
  REQUIRE(a.shape() == b.shape());
  double worst = 0.0;
  const T* pa = a.data();
  const T* pb = b.data();
  for (std::int64_t i = 0; i < a.numel(); ++i)
    worst = std::max(worst, std::abs(static_cast<double>(pa[i]) - static_cast<double>(pb[i])));
  return worst;
}

template <typename T>
double max_rel_diff(const cet::Tensor<T>& a, const cet::Tensor<T>& b) {
  REQUIRE(a.shape() == b.shape());
  double worst = 0.0;
  const T* pa = a.data();
  const T* pb = b.data();
  for (std::int64_t i = 0; i < a.numel(); ++i)
    worst = std::max(worst, rel_err(static_cast<double>(pa[i]), static_cast<double>(pb[i])));
  return worst;
}

// Central-difference gradient check.  `f` must rebuild the computation from
// the leaves on every call (record on the given tape, or run plain when the
// tape is null) and return a scalar.  Returns the worst rel_err between the
// tape gradient and the numeric derivative over every element of every leaf.
inline double fd_max_rel(const std::function<cet::Tensor<double>(cet::Tape<double>*)>& f,
                         std::vector<cet::Tensor<double>> leaves, double eps = 1e-5) {
  for (auto& l : leaves) {
    l.set_requires_grad(true);
    l.zero_grad();
  }
  cet::Tape<double> tape;
  cet::Tensor<double> loss = f(&tape);
  tape.backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(leaves.size());
  for (auto& l : leaves) analytic.push_back(l.grad());

  double worst = 0.0;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    cet::Tensor<double>& l = leaves[li];
    double* d = l.data();
    for (std::int64_t i = 0; i < l.numel(); ++i) {
      const double saved = d[i];
      d[i] = saved + eps;
      const double fp = f(nullptr).at(0, 0, 0, 0);
      d[i] = saved - eps;
      const double fm = f(nullptr).at(0, 0, 0, 0);
      d[i] = saved;
      const double numeric = (fp - fm) / (2.0 * eps);
      worst = std::max(worst, rel_err(analytic[li][static_cast<std::size_t>(i)], numeric));
    }
  }
  return worst;
}

}  // namespace testutil
