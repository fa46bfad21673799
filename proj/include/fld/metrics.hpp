#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fld/mog.hpp"
#include "fld/tensor.hpp"

namespace fld {

enum class CalibrationMethod { None, TrainSplit };

struct CalibrationConstant {
  double c_value = 0.0;
  CalibrationMethod method = CalibrationMethod::None;
  std::uint64_t split_seed = 0;
  // 99.9th percentile of log O_j under the surrogate (ideal) generator; the
  // default memorization threshold. Only set for TrainSplit.
  std::optional<double> log_delta;
  // Final objective of the surrogate fit and whether its last epoch moved the
  // objective by less than 1e-3 (relative).
  std::optional<double> surrogate_objective;
  bool surrogate_converged = false;

  // A user-supplied constant; not estimated here.
  static CalibrationConstant fixed(double c) {
    CalibrationConstant out;
    out.c_value = c;
    return out;
  }
};

struct FldResult {
  double fld_test = 0.0;
  double fld_train = 0.0;
  double gen_gap = 0.0;       // fld_train - fld_test
  double raw_nll_test = 0.0;  // -mean test log-likelihood / d, nats per dim
  CalibrationConstant constant;

  // Negative generalization gap: train is likelier than test.
  bool overfitting() const { return gen_gap < 0.0; }
};

// -(100/d) * mean(log_likelihood) - c
double fld_score(const Vector& log_lik, std::size_t dim, double c);

// Scores an already-fitted model. `gap_query` is the set used for the train
// side of the generalization gap (normally the fitting train set).
FldResult fld_from_model(const MoGModel& model, const FeatureMatrix& test,
                         const FeatureMatrix& gap_query,
                         const CalibrationConstant& c);

// Fits the mixture on (gen centers, train) and scores test and train.
// `gap_train`, when given, replaces train on the train side of the gap.
FldResult fld(const FeatureMatrix& test, const FeatureMatrix& gen,
              const FeatureMatrix& train, const FitConfig& cfg,
              const CalibrationConstant& c,
              const FeatureMatrix* gap_train = nullptr);

struct CalibrationSplit {
  FeatureMatrix centers;  // half A, stands in for an ideal generated set
  FeatureMatrix fitting;  // half B, used to fit the bandwidths
};

// Seeded random half split of the train set. Requires >= 10 rows.
CalibrationSplit split_for_calibration(const FeatureMatrix& train,
                                       std::uint64_t seed);

CalibrationConstant calibrate(const FeatureMatrix& train,
                              const FeatureMatrix& test, const FitConfig& cfg,
                              std::uint64_t seed);

enum class RankingKind { Memorization, Fidelity };

struct SampleRanking {
  RankingKind kind;
  Vector scores;                    // log-space, one per generated sample
  std::vector<std::size_t> order;   // descending by score, ties by index
  std::optional<double> log_threshold;
  std::vector<bool> flagged;        // score > log_threshold; empty if no threshold

  std::size_t flagged_count() const;
};

SampleRanking make_ranking(RankingKind kind, Vector scores,
                           std::optional<double> log_threshold = std::nullopt);

SampleRanking memorization_ranking(const MoGModel& model,
                                   const FeatureMatrix& train,
                                   std::optional<double> log_delta = std::nullopt);

// Fits a mixture centred on the test set to the train set, then scores each
// generated sample by its log-density under that mixture.
SampleRanking fidelity_ranking(const FeatureMatrix& gen,
                               const FeatureMatrix& test,
                               const FeatureMatrix& train, const FitConfig& cfg);

// Linear-interpolated percentile, q in [0, 100].
double percentile(std::vector<double> values, double q);

}  // namespace fld
