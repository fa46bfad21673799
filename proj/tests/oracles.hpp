#pragma once

// Naive reference implementations used only by tests. Everything here works in
// plain loops and, where stated, in direct (non-log) probability space.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "fld/tensor.hpp"

namespace fld::oracle {

inline RowMatrix random_matrix(std::size_t n, std::size_t d, std::uint64_t seed,
                               double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  RowMatrix x(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) x(i, k) = g(rng);
  return x;
}

inline FeatureMatrix random_features(std::size_t n, std::size_t d, std::uint64_t seed,
                                     Role role = Role::Train, double scale = 1.0) {
  return FeatureMatrix(random_matrix(n, d, seed, scale), role);
}

inline double sq_dist(const RowMatrix& a, std::size_t i, const RowMatrix& b, std::size_t j) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < a.cols(); ++k) {
    const double diff = a(i, k) - b(j, k);
    s += diff * diff;
  }
  return s;
}

inline double normal_density(double sq, double var, std::size_t d) {
  return std::pow(2.0 * std::numbers::pi * var, -0.5 * static_cast<double>(d)) *
         std::exp(-sq / (2.0 * var));
}

// Mixture density of query row i, direct space.
inline double mixture_density(const RowMatrix& centers, const std::vector<double>& var,
                              const RowMatrix& q, std::size_t i) {
  double p = 0.0;
  for (std::size_t j = 0; j < var.size(); ++j) {
    p += normal_density(sq_dist(q, i, centers, j), var[j], q.cols());
  }
  return p / static_cast<double>(var.size());
}

// -(1/n) sum_i log(L_i + (1/m) sum_j N(x_i; c_j, var_j)); an empty `base`
// drops the L_i term.
inline double train_objective(const RowMatrix& centers, const std::vector<double>& var,
                              const RowMatrix& train, const std::vector<double>& base) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < train.rows(); ++i) {
    double p = mixture_density(centers, var, train, i);
    if (!base.empty()) p += base[i];
    total += std::log(p);
  }
  return -total / static_cast<double>(train.rows());
}

// Golden-section minimizer on [lo, hi].
inline double golden_min(const std::function<double(double)>& f, double lo, double hi,
                         int iters = 200) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int t = 0; t < iters; ++t) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - r * (b - a); fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + r * (b - a); fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

}  // namespace fld::oracle
