#include "fld/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fld/errors.hpp"

namespace fld {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::Train:
      return "train";
    case Role::Test:
      return "test";
    case Role::Generated:
      return "generated";
    case Role::Baseline:
      return "baseline";
  }
  return "unknown";
}

FeatureMatrix::FeatureMatrix(RowMatrix data, Role role,
                             std::vector<std::string> ids)
    : data_(std::move(data)), role_(role), ids_(std::move(ids)) {
  if (data_.rows() < 1 || data_.cols() < 1) {
    throw DataError("feature matrix must have at least one row and column");
  }
  if (!data_.allFinite()) {
    for (Eigen::Index i = 0; i < data_.rows(); ++i) {
      for (Eigen::Index k = 0; k < data_.cols(); ++k) {
        if (!std::isfinite(data_(i, k))) {
          throw DataError("non-finite feature value at row " +
                          std::to_string(i) + ", column " + std::to_string(k));
        }
      }
    }
  }
  if (!ids_.empty() && ids_.size() != rows()) {
    throw DataError("id count " + std::to_string(ids_.size()) +
                    " does not match row count " + std::to_string(rows()));
  }
}

std::string FeatureMatrix::id(std::size_t row) const {
  return ids_.empty() ? std::to_string(row) : ids_.at(row);
}

FeatureMatrix FeatureMatrix::select(std::span<const std::size_t> rows) const {
  RowMatrix out(static_cast<Eigen::Index>(rows.size()), data_.cols());
  std::vector<std::string> out_ids;
  if (has_ids()) out_ids.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= this->rows()) throw DataError("row index out of range");
    out.row(static_cast<Eigen::Index>(r)) =
        data_.row(static_cast<Eigen::Index>(rows[r]));
    if (has_ids()) out_ids.push_back(ids_[rows[r]]);
  }
  return FeatureMatrix(std::move(out), role_, std::move(out_ids));
}

FeatureMatrix FeatureMatrix::with_role(Role role) const {
  FeatureMatrix copy = *this;
  copy.role_ = role;
  return copy;
}

void require_same_dim(const FeatureMatrix& a, const FeatureMatrix& b) {
  if (a.dim() != b.dim()) {
    throw DimensionError("dimension mismatch: " + std::string(to_string(a.role())) +
                         " has d=" + std::to_string(a.dim()) + ", " +
                         std::string(to_string(b.role())) +
                         " has d=" + std::to_string(b.dim()));
  }
}

namespace {

template <typename Fn>
void for_each_block(Eigen::Index n, std::size_t block_rows, Fn&& fn) {
  const auto block = static_cast<Eigen::Index>(std::max<std::size_t>(block_rows, 1));
  for (Eigen::Index start = 0; start < n; start += block) {
    fn(start, std::min(block, n - start));
  }
}

}  // namespace

DistanceMatrix pairwise_sq_dist(const FeatureMatrix& a, const FeatureMatrix& b,
                                std::size_t block_rows) {
  require_same_dim(a, b);
  const RowMatrix& A = a.data();
  const RowMatrix& B = b.data();
  RowMatrix out(A.rows(), B.rows());
  for_each_block(A.rows(), block_rows, [&](Eigen::Index start, Eigen::Index len) {
    for (Eigen::Index i = start; i < start + len; ++i) {
      out.row(i) = (B.rowwise() - A.row(i)).rowwise().squaredNorm().transpose();
    }
  });
  return {std::move(out), a.role(), b.role()};
}

Vector nearest_sq_dist(const FeatureMatrix& a, const FeatureMatrix& b,
                       std::size_t block_rows) {
  require_same_dim(a, b);
  const RowMatrix& A = a.data();
  const RowMatrix& B = b.data();
  Vector out(A.rows());
  for_each_block(A.rows(), block_rows, [&](Eigen::Index start, Eigen::Index len) {
    for (Eigen::Index i = start; i < start + len; ++i) {
      out(i) = (B.rowwise() - A.row(i)).rowwise().squaredNorm().minCoeff();
    }
  });
  return out;
}

double logsumexp(std::span<const double> values) {
  if (values.empty()) throw DataError("logsumexp of an empty vector");
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    if (std::isnan(v)) throw DataError("logsumexp input contains NaN");
    hi = std::max(hi, v);
  }
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

Moments moments(const FeatureMatrix& x) {
  if (x.rows() < 2) throw DataError("moments need at least two rows");
  const auto n = static_cast<double>(x.rows());
  Vector mean = x.data().colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.data().rowwise() - mean.transpose();
  Eigen::MatrixXd cov = (centered.transpose() * centered) / n;
  return {std::move(mean), std::move(cov)};
}

StandardizationParams fit_standardizer(const FeatureMatrix& x) {
  const auto n = static_cast<double>(x.rows());
  Vector mean = x.data().colwise().mean().transpose();
  Vector var =
      (x.data().rowwise() - mean.transpose()).array().square().colwise().sum() / n;
  Vector stdev = var.array().sqrt().max(kStdevFloor);
  return {std::move(mean), std::move(stdev)};
}

FeatureMatrix apply_standardizer(const StandardizationParams& p,
                                 const FeatureMatrix& x) {
  if (static_cast<std::size_t>(p.mean.size()) != x.dim()) {
    throw DimensionError("standardizer fitted on d=" + std::to_string(p.mean.size()) +
                         ", applied to d=" + std::to_string(x.dim()));
  }
  RowMatrix out = (x.data().rowwise() - p.mean.transpose()).array().rowwise() /
                  p.stdev.transpose().array();
  return FeatureMatrix(std::move(out), x.role(), x.ids());
}

FeatureMatrix invert_standardizer(const StandardizationParams& p,
                                  const FeatureMatrix& x) {
  if (static_cast<std::size_t>(p.mean.size()) != x.dim()) {
    throw DimensionError("standardizer dimension mismatch");
  }
  RowMatrix out = (x.data().array().rowwise() * p.stdev.transpose().array())
                      .matrix()
                      .rowwise() +
                  p.mean.transpose();
  return FeatureMatrix(std::move(out), x.role(), x.ids());
}

}  // namespace fld
