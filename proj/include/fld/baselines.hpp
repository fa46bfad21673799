#pragma once

#include <span>
#include <utility>

#include "fld/tensor.hpp"

namespace fld {

struct GaussianStats {
  Vector mean;
  Eigen::MatrixXd cov;
};

GaussianStats gaussian_stats(const FeatureMatrix& x);

// Frechet distance between two Gaussians:
//   ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2}).
// The trace of the square root is taken from the eigenvalues of the
// symmetric matrix S_b^{1/2} S_a S_b^{1/2}, which shares its spectrum with
// S_a S_b.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);
double fid(const FeatureMatrix& a, const FeatureMatrix& b);

inline constexpr int kDefaultPrecisionRecallK = 3;

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

// k-NN manifold precision/recall: a point is inside a set's manifold when it
// lies within the k-th nearest-neighbour radius of some member of that set.
PrecisionRecall precision_recall(const FeatureMatrix& gen,
                                 const FeatureMatrix& real, int k);

struct CtResult {
  double z = 0.0;
  bool degenerate = false;  // all distances tied; z forced to 0
};

// Mann-Whitney U z-statistic of gen-to-train nearest distances against
// test-to-train nearest distances. Negative means gen sits closer to train
// than held-out data does.
CtResult ct_score(const FeatureMatrix& train, const FeatureMatrix& test,
                  const FeatureMatrix& gen);

// z-statistic (normal approximation, midranks, tie-corrected variance) of the
// Mann-Whitney U for sample x against sample y.
CtResult mann_whitney_z(std::span<const double> x, std::span<const double> y);

// Percentage of generated samples that are not closer to their nearest train
// sample than that sample is to its own nearest train neighbour.
double auth_pct(const FeatureMatrix& train, const FeatureMatrix& gen);

struct BaselineReport {
  double fid_train = 0.0;
  double fid_test = 0.0;
  double fid_gap = 0.0;  // fid_train - fid_test
  double precision = 0.0;
  double recall = 0.0;
  double c_t = 0.0;
  bool c_t_degenerate = false;
  double auth_pct = 0.0;
};

// Precision/recall and FID use the test set as the real reference.
BaselineReport compute_baselines(const FeatureMatrix& train,
                                 const FeatureMatrix& test,
                                 const FeatureMatrix& gen,
                                 int k = kDefaultPrecisionRecallK);

}  // namespace fld
