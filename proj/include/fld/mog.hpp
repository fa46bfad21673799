#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fld/tensor.hpp"

namespace fld {

enum class InitRule {
  // sigma_j^2 = min_i ||center_j - train_i||^2 / d, floored at kVarianceFloor.
  NearestNeighborOverD,
  // sigma_j^2 = FitConfig::init_value for every component.
  Constant,
};

enum class BaseLikelihoodRule {
  // Squared distance to the virtual identity-covariance Gaussian is
  // scale * ||x||^2.
  ScaledSquaredNorm,
  // Distance (not squared) is scale * ||x||^2, so the squared distance is
  // (scale * ||x||^2)^2. Kept for comparison only; vanishes numerically for
  // large norms.
  LiteralDistance,
};

inline constexpr double kVarianceFloor = 1e-8;

struct FitConfig {
  double lr = 0.5;
  int epochs = 50;
  std::size_t batch_size = 10000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double base_likelihood_scale = 0.9;
  BaseLikelihoodRule base_rule = BaseLikelihoodRule::ScaledSquaredNorm;
  std::uint64_t seed = 0;
  InitRule init_rule = InitRule::NearestNeighborOverD;
  double init_value = 1.0;  // variance used by InitRule::Constant
  // Worker threads for the objective. Results do not depend on this value.
  unsigned threads = 1;

  // Throws ConfigError on out-of-range knobs.
  void validate() const;
};

// Per-train-row log L_i. An empty vector means "no base term".
struct BaseLikelihood {
  Vector log_values;

  bool empty() const { return log_values.size() == 0; }
};

struct MoGModel {
  FeatureMatrix centers;
  Vector log_var;  // log sigma_j^2, one per center row
  std::vector<double> fit_trace;

  std::size_t components() const { return centers.rows(); }
  std::size_t dim() const { return centers.dim(); }
  Vector variances() const { return log_var.array().exp(); }
};

Vector init_variances(const FeatureMatrix& centers, const FeatureMatrix& train,
                      InitRule rule, double init_value = 1.0);

BaseLikelihood compute_base_likelihood(
    const FeatureMatrix& train, double scale,
    BaseLikelihoodRule rule = BaseLikelihoodRule::ScaledSquaredNorm);

struct ObjectiveValue {
  double value = 0.0;
  Vector gradient;  // d value / d log_var
};

// The bandwidth-selection objective with the train-to-center distance matrix
// computed once. value = -(1/|B|) sum_{i in B} log( (1/m) sum_j N_ij + L_i ).
class BandwidthObjective {
 public:
  BandwidthObjective(const FeatureMatrix& centers, const FeatureMatrix& train,
                     BaseLikelihood base, unsigned threads = 1);

  std::size_t train_rows() const { return static_cast<std::size_t>(dist_.rows()); }
  std::size_t components() const { return static_cast<std::size_t>(dist_.cols()); }
  const RowMatrix& distances() const { return dist_; }

  // Objective and gradient over all train rows.
  ObjectiveValue evaluate(const Vector& log_var) const;
  // Objective and gradient over the listed train rows only.
  ObjectiveValue evaluate(const Vector& log_var,
                          std::span<const std::size_t> rows) const;

 private:
  RowMatrix dist_;
  BaseLikelihood base_;
  std::size_t dim_;
  unsigned threads_;
};

ObjectiveValue train_nll_objective(const MoGModel& model,
                                   const FeatureMatrix& train,
                                   const BaseLikelihood& base);

// Adam on log_var. Trace entry 0 is the objective at initialization, entry e
// the full-train objective after epoch e.
MoGModel fit(const FeatureMatrix& centers, const FeatureMatrix& train,
             const FitConfig& cfg);

// Same as fit() but starting from the given log-variances.
MoGModel fit_from(const FeatureMatrix& centers, const FeatureMatrix& train,
                  const FitConfig& cfg, Vector initial_log_var);

// log p(x) = log (1/m) sum_j N(x; center_j, sigma_j^2 I), one per query row.
Vector log_likelihood(const MoGModel& model, const FeatureMatrix& query);

// log O_j = log max_i N(train_i; center_j, sigma_j^2 I), one per component.
Vector per_component_max_train_density(const MoGModel& model,
                                       const FeatureMatrix& train);

}  // namespace fld
