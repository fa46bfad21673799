#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "fld/baselines.hpp"
#include "fld/metrics.hpp"
#include "fld/mog.hpp"

namespace fld {

enum class CalibrationMode { Calibrate, Constant };

struct EvalOptions {
  FitConfig fit;
  // Standardize every split with statistics fitted on train.
  bool standardize = true;
  CalibrationMode calibration = CalibrationMode::Calibrate;
  double constant = 0.0;  // used with CalibrationMode::Constant
  // Global seed; sub-seeds are derived with derive_seed().
  std::uint64_t seed = 0;

  bool compute_fld = true;
  bool compute_baselines = false;
  int pr_k = kDefaultPrecisionRecallK;
  bool compute_rankings = false;
  // Memorization threshold override (log space). Defaults to the
  // calibration surrogate's 99.9th percentile when calibrating.
  std::optional<double> log_delta;
  bool record_timings = false;
};

struct MetricReport {
  std::optional<FldResult> fld;
  std::optional<BaselineReport> baselines;
  std::optional<SampleRanking> memorization;
  std::optional<SampleRanking> fidelity;
  std::optional<MoGModel> model;  // the fitted generated-set mixture
  EvalOptions config;             // options as run, with derived seeds applied
  std::map<std::string, double> timings_ms;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t n_gen = 0;
  std::size_t dim = 0;
};

// Runs the requested metrics. Baselines are computed on the features as
// given; the mixture-based metrics see standardized features when enabled.
MetricReport evaluate(const FeatureMatrix& train, const FeatureMatrix& test,
                      const FeatureMatrix& gen, const EvalOptions& options);

struct StandardizedSplits {
  FeatureMatrix train;
  FeatureMatrix test;
  FeatureMatrix gen;
};

StandardizedSplits standardize_splits(const FeatureMatrix& train,
                                      const FeatureMatrix& test,
                                      const FeatureMatrix& gen);

// FitConfig with the batching seed derived from the global seed.
FitConfig seeded_fit_config(const EvalOptions& options);

}  // namespace fld
