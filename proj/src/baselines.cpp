#include "fld/baselines.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fld/errors.hpp"

namespace fld {

namespace {

constexpr double kEigenTolerance = 1e-7;

// Clamps tiny negative eigenvalues produced by round-off; anything more
// negative than the tolerance means the input was not PSD.
Vector clamped_eigenvalues(const Eigen::MatrixXd& sym, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError(std::string("eigendecomposition failed for ") + what);
  }
  Vector ev = solver.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -kEigenTolerance * scale) {
      throw NumericalError(std::string(what) + " is not positive semi-definite");
    }
    ev(i) = std::max(ev(i), 0.0);
  }
  return ev;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition failed for covariance");
  }
  Vector ev = solver.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -kEigenTolerance * scale) {
      throw NumericalError("covariance is not positive semi-definite");
    }
    ev(i) = std::sqrt(std::max(ev(i), 0.0));
  }
  return solver.eigenvectors() * ev.asDiagonal() * solver.eigenvectors().transpose();
}

// Index and squared distance of the nearest row of `pool` to `q`, optionally
// skipping one row. Ties resolve to the lowest index.
std::pair<Eigen::Index, double> nearest(const RowMatrix& pool,
                                        const Eigen::Ref<const Eigen::RowVectorXd>& q,
                                        Eigen::Index skip = -1) {
  Eigen::Index best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < pool.rows(); ++r) {
    if (r == skip) continue;
    const double d = (pool.row(r) - q).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = r;
    }
  }
  return {best, best_d};
}

// Squared distance from every row to its k-th nearest other row of the same set.
Vector knn_radii(const RowMatrix& x, int k) {
  Vector radii(x.rows());
  std::vector<double> row(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    row.clear();
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      if (r != i) row.push_back((x.row(r) - x.row(i)).squaredNorm());
    }
    auto kth = row.begin() + (k - 1);
    std::nth_element(row.begin(), kth, row.end());
    radii(i) = *kth;
  }
  return radii;
}

double manifold_coverage(const RowMatrix& queries, const RowMatrix& support,
                         const Vector& radii) {
  std::size_t inside = 0;
  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    for (Eigen::Index s = 0; s < support.rows(); ++s) {
      if ((support.row(s) - queries.row(q)).squaredNorm() <= radii(s)) {
        ++inside;
        break;
      }
    }
  }
  return static_cast<double>(inside) / static_cast<double>(queries.rows());
}

}  // namespace

GaussianStats gaussian_stats(const FeatureMatrix& x) {
  Moments mo = moments(x);
  return {std::move(mo.mean), std::move(mo.cov)};
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  if (a.mean.size() != b.mean.size()) {
    throw DimensionError("Gaussian statistics differ in dimension");
  }
  const Eigen::MatrixXd sqrt_b = psd_sqrt(b.cov);
  Eigen::MatrixXd inner = sqrt_b * a.cov * sqrt_b;
  inner = 0.5 * (inner + inner.transpose());
  const Vector ev = clamped_eigenvalues(inner, "covariance product");
  const double tr_sqrt = ev.array().sqrt().sum();
  const double mean_term = (a.mean - b.mean).squaredNorm();
  const double value = mean_term + a.cov.trace() + b.cov.trace() - 2.0 * tr_sqrt;
  return std::max(value, 0.0);
}

double fid(const FeatureMatrix& a, const FeatureMatrix& b) {
  require_same_dim(a, b);
  return frechet_distance(gaussian_stats(a), gaussian_stats(b));
}

PrecisionRecall precision_recall(const FeatureMatrix& gen,
                                 const FeatureMatrix& real, int k) {
  require_same_dim(gen, real);
  const auto limit = std::min(gen.rows(), real.rows());
  if (k < 1 || static_cast<std::size_t>(k) >= limit) {
    throw ConfigError("precision/recall k=" + std::to_string(k) +
                      " must satisfy 1 <= k < " + std::to_string(limit));
  }
  const Vector real_radii = knn_radii(real.data(), k);
  const Vector gen_radii = knn_radii(gen.data(), k);
  return {manifold_coverage(gen.data(), real.data(), real_radii),
          manifold_coverage(real.data(), gen.data(), gen_radii)};
}

CtResult mann_whitney_z(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw DataError("Mann-Whitney test needs two non-empty samples");
  const std::size_t n1 = x.size();
  const std::size_t n2 = y.size();
  const std::size_t total = n1 + n2;

  std::vector<std::pair<double, bool>> pooled;  // (value, from x)
  pooled.reserve(total);
  for (double v : x) pooled.emplace_back(v, true);
  for (double v : y) pooled.emplace_back(v, false);
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  double rank_sum_x = 0.0;
  double tie_term = 0.0;
  for (std::size_t i = 0; i < total;) {
    std::size_t j = i;
    while (j < total && pooled[j].first == pooled[i].first) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (pooled[t].second) rank_sum_x += midrank;
    }
    const auto tied = static_cast<double>(j - i);
    tie_term += tied * tied * tied - tied;
    i = j;
  }

  const double dn1 = static_cast<double>(n1);
  const double dn2 = static_cast<double>(n2);
  const double dn = static_cast<double>(total);
  const double u = rank_sum_x - dn1 * (dn1 + 1.0) / 2.0;
  const double mean_u = dn1 * dn2 / 2.0;
  double var_u = dn1 * dn2 / 12.0 * (dn + 1.0);
  if (total > 1) var_u -= dn1 * dn2 / 12.0 * tie_term / (dn * (dn - 1.0));
  if (!(var_u > 0.0)) return {0.0, true};
  return {(u - mean_u) / std::sqrt(var_u), false};
}

CtResult ct_score(const FeatureMatrix& train, const FeatureMatrix& test,
                  const FeatureMatrix& gen) {
  require_same_dim(train, test);
  require_same_dim(train, gen);
  const Vector gen_d = nearest_sq_dist(gen, train).array().sqrt();
  const Vector test_d = nearest_sq_dist(test, train).array().sqrt();
  return mann_whitney_z(std::span<const double>(gen_d.data(), gen_d.size()),
                        std::span<const double>(test_d.data(), test_d.size()));
}

double auth_pct(const FeatureMatrix& train, const FeatureMatrix& gen) {
  require_same_dim(train, gen);
  if (train.rows() < 2) throw DataError("AuthPct needs at least two train rows");
  const RowMatrix& T = train.data();
  Vector own_nn(T.rows());
  for (Eigen::Index a = 0; a < T.rows(); ++a) {
    own_nn(a) = nearest(T, T.row(a), a).second;
  }
  std::size_t authentic = 0;
  const RowMatrix& G = gen.data();
  for (Eigen::Index g = 0; g < G.rows(); ++g) {
    const auto [a, d] = nearest(T, G.row(g));
    if (!(d < own_nn(a))) ++authentic;
  }
  return 100.0 * static_cast<double>(authentic) / static_cast<double>(G.rows());
}

BaselineReport compute_baselines(const FeatureMatrix& train,
                                 const FeatureMatrix& test,
                                 const FeatureMatrix& gen, int k) {
  BaselineReport out;
  const GaussianStats gen_stats = gaussian_stats(gen);
  out.fid_train = frechet_distance(gen_stats, gaussian_stats(train));
  out.fid_test = frechet_distance(gen_stats, gaussian_stats(test));
  out.fid_gap = out.fid_train - out.fid_test;
  const PrecisionRecall pr = precision_recall(gen, test, k);
  out.precision = pr.precision;
  out.recall = pr.recall;
  const CtResult ct = ct_score(train, test, gen);
  out.c_t = ct.z;
  out.c_t_degenerate = ct.degenerate;
  out.auth_pct = auth_pct(train, gen);
  return out;
}

}  // namespace fld
