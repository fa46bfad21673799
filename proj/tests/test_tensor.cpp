#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "fld/errors.hpp"
#include "fld/tensor.hpp"
#include "oracles.hpp"

using namespace fld;

namespace {

FeatureMatrix rows(std::initializer_list<std::initializer_list<double>> values,
                   Role role = Role::Train) {
  const auto n = values.size();
  const auto d = values.begin()->size();
  RowMatrix x(n, d);
  Eigen::Index i = 0;
  for (const auto& r : values) {
    Eigen::Index k = 0;
    for (double v : r) x(i, k++) = v;
    ++i;
  }
  return FeatureMatrix(x, role);
}

}  // namespace

TEST(FeatureMatrix, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(FeatureMatrix(RowMatrix(0, 3), Role::Train), DataError);
  EXPECT_THROW(FeatureMatrix(RowMatrix(3, 0), Role::Train), DataError);
  RowMatrix x = RowMatrix::Zero(2, 2);
  x(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(FeatureMatrix(x, Role::Train), DataError);
  x(1, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(FeatureMatrix(x, Role::Train), DataError);
}

TEST(FeatureMatrix, IdsMustMatchRows) {
  EXPECT_THROW(FeatureMatrix(RowMatrix::Zero(2, 2), Role::Test, {"a"}), DataError);
  FeatureMatrix m(RowMatrix::Zero(2, 2), Role::Test, {"a", "b"});
  EXPECT_EQ(m.id(1), "b");
  const std::vector<std::size_t> pick{1};
  EXPECT_EQ(m.select(pick).id(0), "b");
}

TEST(FeatureMatrix, DimensionMismatchIsTyped) {
  const auto a = oracle::random_features(3, 2, 1);
  const auto b = oracle::random_features(3, 4, 2);
  EXPECT_THROW(require_same_dim(a, b), DimensionError);
  EXPECT_THROW(pairwise_sq_dist(a, b), DimensionError);
}

TEST(PairwiseSqDist, IdenticalPointsGiveZero) {
  const auto d = pairwise_sq_dist(rows({{1, 2}}), rows({{1, 2}}));
  ASSERT_EQ(d.values.rows(), 1);
  EXPECT_EQ(d.values(0, 0), 0.0);
}

TEST(PairwiseSqDist, ThreeFourFive) {
  const auto d = pairwise_sq_dist(rows({{0, 0}}), rows({{3, 4}}));
  EXPECT_DOUBLE_EQ(d.values(0, 0), 25.0);
}

TEST(PairwiseSqDist, MatchesTripleLoop) {
  const auto a = oracle::random_features(5, 3, 11);
  const auto b = oracle::random_features(4, 3, 12, Role::Generated);
  const auto d = pairwise_sq_dist(a, b);
  EXPECT_EQ(d.row_role, Role::Train);
  EXPECT_EQ(d.col_role, Role::Generated);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      EXPECT_LT(oracle::rel_err(d.values(i, j), oracle::sq_dist(a.data(), i, b.data(), j)),
                1e-12);
}

TEST(PairwiseSqDist, BlockSizeDoesNotChangeResult) {
  const auto a = oracle::random_features(37, 5, 3);
  const auto b = oracle::random_features(19, 5, 4);
  const auto whole = pairwise_sq_dist(a, b);
  const auto blocked = pairwise_sq_dist(a, b, 4);
  EXPECT_EQ(whole.values, blocked.values);
}

TEST(PairwiseSqDist, SymmetricAndNonNegative) {
  const auto a = oracle::random_features(12, 3, 5);
  const auto d = pairwise_sq_dist(a, a);
  for (Eigen::Index i = 0; i < 12; ++i) {
    EXPECT_EQ(d.values(i, i), 0.0);
    for (Eigen::Index j = 0; j < 12; ++j) {
      EXPECT_GE(d.values(i, j), 0.0);
      EXPECT_EQ(d.values(i, j), d.values(j, i));
    }
  }
}

TEST(NearestSqDist, MatchesRowMinimum) {
  const auto a = oracle::random_features(9, 3, 6);
  const auto b = oracle::random_features(14, 3, 7);
  const Vector nn = nearest_sq_dist(a, b, 2);
  const auto d = pairwise_sq_dist(a, b);
  for (Eigen::Index i = 0; i < 9; ++i) EXPECT_EQ(nn(i), d.values.row(i).minCoeff());
}

TEST(Logsumexp, SingleElement) {
  const std::vector<double> v{-3.25};
  EXPECT_EQ(logsumexp(v), -3.25);
}

TEST(Logsumexp, TwoZeros) {
  const std::vector<double> v{0.0, 0.0};
  EXPECT_NEAR(logsumexp(v), std::numbers::ln2, 1e-15);
}

TEST(Logsumexp, LargeValuesDoNotOverflow) {
  const std::vector<double> v{1000.0, 1000.0};
  EXPECT_NEAR(logsumexp(v), 1000.0 + std::numbers::ln2, 1e-12);
}

TEST(Logsumexp, EdgeCases) {
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<double> all_neg_inf{-inf, -inf};
  EXPECT_EQ(logsumexp(all_neg_inf), -inf);
  const std::vector<double> mixed{-inf, 2.0};
  EXPECT_DOUBLE_EQ(logsumexp(mixed), 2.0);
  EXPECT_THROW(logsumexp(std::vector<double>{}), DataError);
  const std::vector<double> nan{1.0, std::numeric_limits<double>::quiet_NaN()};
  EXPECT_THROW(logsumexp(nan), DataError);
}

TEST(Moments, HandComputed) {
  const auto m = moments(rows({{0}, {2}}));
  EXPECT_DOUBLE_EQ(m.mean(0), 1.0);
  EXPECT_DOUBLE_EQ(m.cov(0, 0), 1.0);
}

TEST(Moments, RepeatedRowHasZeroCovariance) {
  const auto m = moments(rows({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}, {1, 2, 3}, {1, 2, 3}}));
  EXPECT_TRUE(m.cov.isZero(0.0));
}

TEST(Moments, MatchesTwoPassOracle) {
  const auto x = oracle::random_features(50, 4, 21, Role::Train, 3.0);
  const auto m = moments(x);
  const RowMatrix& v = x.data();
  std::vector<double> mean(4, 0.0);
  for (int i = 0; i < 50; ++i)
    for (int k = 0; k < 4; ++k) mean[k] += v(i, k) / 50.0;
  for (int a = 0; a < 4; ++a) {
    EXPECT_LT(oracle::rel_err(m.mean(a), mean[a]), 1e-10);
    for (int b = 0; b < 4; ++b) {
      double s = 0.0;
      for (int i = 0; i < 50; ++i) s += (v(i, a) - mean[a]) * (v(i, b) - mean[b]);
      EXPECT_LT(oracle::rel_err(m.cov(a, b), s / 50.0), 1e-10);
    }
  }
}

TEST(Standardizer, CentersMidpoint) {
  const auto p = fit_standardizer(rows({{0}, {2}}));
  const auto out = apply_standardizer(p, rows({{1}}));
  EXPECT_EQ(out.data()(0, 0), 0.0);
}

TEST(Standardizer, ConstantColumnIsFloored) {
  const auto x = rows({{5, 1}, {5, 2}, {5, 4}});
  const auto p = fit_standardizer(x);
  EXPECT_EQ(p.stdev(0), kStdevFloor);
  const auto out = apply_standardizer(p, x);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_EQ(out.data()(i, 0), 0.0);
}

TEST(Standardizer, RoundTrip) {
  const auto x = oracle::random_features(40, 6, 8, Role::Test, 7.0);
  const auto p = fit_standardizer(x);
  const auto back = invert_standardizer(p, apply_standardizer(p, x));
  EXPECT_EQ(back.role(), Role::Test);
  for (Eigen::Index i = 0; i < 40; ++i)
    for (Eigen::Index k = 0; k < 6; ++k)
      EXPECT_LT(oracle::rel_err(back.data()(i, k), x.data()(i, k)), 1e-12);
}

TEST(Standardizer, DimensionMismatch) {
  const auto p = fit_standardizer(oracle::random_features(5, 2, 1));
  EXPECT_THROW(apply_standardizer(p, oracle::random_features(5, 3, 2)), DimensionError);
}

TEST(Logsumexp, ShiftInvariant) {
  const auto x = oracle::random_matrix(1, 40, 9, 30.0);
  std::vector<double> v(x.data(), x.data() + 40), shifted = v;
  for (double& s : shifted) s += 123.456;
  EXPECT_NEAR(logsumexp(shifted), logsumexp(v) + 123.456, 1e-12);
}
