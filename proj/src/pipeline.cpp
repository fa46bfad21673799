#include "fld/pipeline.hpp"

#include <chrono>

#include "fld/seed.hpp"

namespace fld {

namespace {

class StageTimer {
 public:
  StageTimer(std::map<std::string, double>& sink, std::string name)
      : sink_(sink), name_(std::move(name)), start_(Clock::now()) {}
  ~StageTimer() {
    sink_[name_] +=
        std::chrono::duration<double, std::milli>(Clock::now() - start_).count();
  }

 private:
  using Clock = std::chrono::steady_clock;
  std::map<std::string, double>& sink_;
  std::string name_;
  Clock::time_point start_;
};

}  // namespace

StandardizedSplits standardize_splits(const FeatureMatrix& train,
                                      const FeatureMatrix& test,
                                      const FeatureMatrix& gen) {
  const StandardizationParams params = fit_standardizer(train);
  return {apply_standardizer(params, train), apply_standardizer(params, test),
          apply_standardizer(params, gen)};
}

FitConfig seeded_fit_config(const EvalOptions& options) {
  FitConfig cfg = options.fit;
  cfg.seed = derive_seed(options.seed, SeedStream::Batching);
  return cfg;
}

MetricReport evaluate(const FeatureMatrix& train, const FeatureMatrix& test,
                      const FeatureMatrix& gen, const EvalOptions& options) {
  require_same_dim(train, test);
  require_same_dim(train, gen);
  options.fit.validate();

  MetricReport report;
  report.config = options;
  report.config.fit = seeded_fit_config(options);
  report.n_train = train.rows();
  report.n_test = test.rows();
  report.n_gen = gen.rows();
  report.dim = train.dim();
  const FitConfig& cfg = report.config.fit;

  if (options.compute_fld || options.compute_rankings) {
    std::optional<StandardizedSplits> scaled;
    if (options.standardize) {
      StageTimer t(report.timings_ms, "standardize");
      scaled = standardize_splits(train, test, gen);
    }
    const FeatureMatrix& tr = scaled ? scaled->train : train;
    const FeatureMatrix& te = scaled ? scaled->test : test;
    const FeatureMatrix& ge = scaled ? scaled->gen : gen;

    CalibrationConstant constant = CalibrationConstant::fixed(options.constant);
    if (options.calibration == CalibrationMode::Calibrate) {
      StageTimer t(report.timings_ms, "calibrate");
      constant = calibrate(tr, te, cfg,
                           derive_seed(options.seed, SeedStream::CalibrationSplit));
    }

    MoGModel model = [&] {
      StageTimer t(report.timings_ms, "fit");
      return fit(ge, tr, cfg);
    }();

    if (options.compute_fld) {
      StageTimer t(report.timings_ms, "score");
      report.fld = fld_from_model(model, te, tr, constant);
    }
    if (options.compute_rankings) {
      StageTimer t(report.timings_ms, "rank");
      const std::optional<double> threshold =
          options.log_delta ? options.log_delta : constant.log_delta;
      report.memorization = memorization_ranking(model, tr, threshold);
      report.fidelity = fidelity_ranking(ge, te, tr, cfg);
    }
    report.model = std::move(model);
  }

  if (options.compute_baselines) {
    StageTimer t(report.timings_ms, "baselines");
    report.baselines = compute_baselines(train, test, gen, options.pr_k);
  }
  return report;
}

}  // namespace fld
