#include "fld/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fld/errors.hpp"

namespace fld {

double fld_score(const Vector& log_lik, std::size_t dim, double c) {
  return -(100.0 / static_cast<double>(dim)) * log_lik.mean() - c;
}

FldResult fld_from_model(const MoGModel& model, const FeatureMatrix& test,
                         const FeatureMatrix& gap_query,
                         const CalibrationConstant& c) {
  const std::size_t d = model.dim();
  const Vector test_ll = log_likelihood(model, test);
  FldResult out;
  out.constant = c;
  out.fld_test = fld_score(test_ll, d, c.c_value);
  out.raw_nll_test = -test_ll.mean() / static_cast<double>(d);
  if (&gap_query == &test) {
    out.fld_train = out.fld_test;
  } else {
    out.fld_train = fld_score(log_likelihood(model, gap_query), d, c.c_value);
  }
  out.gen_gap = out.fld_train - out.fld_test;
  return out;
}

FldResult fld(const FeatureMatrix& test, const FeatureMatrix& gen,
              const FeatureMatrix& train, const FitConfig& cfg,
              const CalibrationConstant& c, const FeatureMatrix* gap_train) {
  require_same_dim(gen, train);
  require_same_dim(gen, test);
  const MoGModel model = fit(gen, train, cfg);
  return fld_from_model(model, test, gap_train ? *gap_train : train, c);
}

CalibrationSplit split_for_calibration(const FeatureMatrix& train,
                                       std::uint64_t seed) {
  if (train.rows() < 10) {
    throw DataError("calibration needs at least 10 train rows, got " +
                    std::to_string(train.rows()));
  }
  std::vector<std::size_t> perm(train.rows());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::size_t half = train.rows() / 2;
  std::span<const std::size_t> all(perm);
  return {train.select(all.first(half)).with_role(Role::Baseline),
          train.select(all.subspan(half))};
}

CalibrationConstant calibrate(const FeatureMatrix& train,
                              const FeatureMatrix& test, const FitConfig& cfg,
                              std::uint64_t seed) {
  require_same_dim(train, test);
  const CalibrationSplit split = split_for_calibration(train, seed);
  const MoGModel surrogate = fit(split.centers, split.fitting, cfg);

  CalibrationConstant out;
  out.method = CalibrationMethod::TrainSplit;
  out.split_seed = seed;
  out.c_value = fld_score(log_likelihood(surrogate, test), train.dim(), 0.0);
  if (!std::isfinite(out.c_value)) {
    throw NumericalError("calibration constant is not finite");
  }

  const Vector log_o = per_component_max_train_density(surrogate, split.fitting);
  out.log_delta = percentile(std::vector<double>(log_o.begin(), log_o.end()), 99.9);

  const auto& trace = surrogate.fit_trace;
  out.surrogate_objective = trace.back();
  if (trace.size() >= 2) {
    const double last = trace.back();
    const double prev = trace[trace.size() - 2];
    out.surrogate_converged =
        std::abs(last - prev) <= 1e-3 * std::max(1.0, std::abs(last));
  }
  return out;
}

std::size_t SampleRanking::flagged_count() const {
  return static_cast<std::size_t>(std::count(flagged.begin(), flagged.end(), true));
}

SampleRanking make_ranking(RankingKind kind, Vector scores,
                           std::optional<double> log_threshold) {
  SampleRanking out{kind, std::move(scores), {}, log_threshold, {}};
  out.order.resize(static_cast<std::size_t>(out.scores.size()));
  std::iota(out.order.begin(), out.order.end(), std::size_t{0});
  std::stable_sort(out.order.begin(), out.order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return out.scores(static_cast<Eigen::Index>(a)) >
                            out.scores(static_cast<Eigen::Index>(b));
                   });
  if (log_threshold) {
    out.flagged.resize(out.order.size());
    for (std::size_t j = 0; j < out.flagged.size(); ++j) {
      out.flagged[j] = out.scores(static_cast<Eigen::Index>(j)) > *log_threshold;
    }
  }
  return out;
}

SampleRanking memorization_ranking(const MoGModel& model,
                                   const FeatureMatrix& train,
                                   std::optional<double> log_delta) {
  return make_ranking(RankingKind::Memorization,
                      per_component_max_train_density(model, train), log_delta);
}

SampleRanking fidelity_ranking(const FeatureMatrix& gen,
                               const FeatureMatrix& test,
                               const FeatureMatrix& train, const FitConfig& cfg) {
  require_same_dim(gen, test);
  require_same_dim(gen, train);
  const MoGModel data_model = fit(test, train, cfg);
  return make_ranking(RankingKind::Fidelity, log_likelihood(data_model, gen));
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("percentile of an empty set");
  if (!(q >= 0.0 && q <= 100.0)) throw ConfigError("percentile must be in [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace fld
