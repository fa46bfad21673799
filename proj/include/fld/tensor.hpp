#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fld {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Role { Train, Test, Generated, Baseline };

std::string_view to_string(Role role);

// Feature-space embeddings, one sample per row. Always finite, never empty.
class FeatureMatrix {
 public:
  FeatureMatrix(RowMatrix data, Role role, std::vector<std::string> ids = {});

  std::size_t rows() const { return static_cast<std::size_t>(data_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(data_.cols()); }
  Role role() const { return role_; }

  const RowMatrix& data() const { return data_; }
  const std::vector<std::string>& ids() const { return ids_; }
  bool has_ids() const { return !ids_.empty(); }

  // Row identifier: the stored id, or the row index rendered as text.
  std::string id(std::size_t row) const;

  // Returns a copy holding only the given rows, in the given order.
  FeatureMatrix select(std::span<const std::size_t> rows) const;
  FeatureMatrix with_role(Role role) const;

 private:
  RowMatrix data_;
  Role role_;
  std::vector<std::string> ids_;
};

// Throws DimensionError if the two matrices disagree on d.
void require_same_dim(const FeatureMatrix& a, const FeatureMatrix& b);

struct DistanceMatrix {
  RowMatrix values;  // squared Euclidean distances, rows x cols
  Role row_role;
  Role col_role;
};

inline constexpr std::size_t kDefaultDistanceBlock = 1024;

// values(i, j) = ||a_i - b_j||^2, evaluated over blocks of `block_rows` rows
// of `a`. Entries are clamped at zero and each entry is summed coordinate by
// coordinate, so the result does not depend on the block size.
DistanceMatrix pairwise_sq_dist(const FeatureMatrix& a, const FeatureMatrix& b,
                                std::size_t block_rows = kDefaultDistanceBlock);

// Squared distance from each row of `a` to its nearest row of `b`.
Vector nearest_sq_dist(const FeatureMatrix& a, const FeatureMatrix& b,
                       std::size_t block_rows = kDefaultDistanceBlock);

// log(sum(exp(v))) with the max shifted out. -inf entries are allowed; NaN
// and empty input throw DataError.
double logsumexp(std::span<const double> values);

struct Moments {
  Vector mean;
  Eigen::MatrixXd cov;  // population (1/n) normalization
};

Moments moments(const FeatureMatrix& x);

inline constexpr double kStdevFloor = 1e-8;

struct StandardizationParams {
  Vector mean;
  Vector stdev;  // floored at kStdevFloor
};

StandardizationParams fit_standardizer(const FeatureMatrix& x);
FeatureMatrix apply_standardizer(const StandardizationParams& p,
                                 const FeatureMatrix& x);
FeatureMatrix invert_standardizer(const StandardizationParams& p,
                                  const FeatureMatrix& x);

}  // namespace fld
