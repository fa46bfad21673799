#include "fld/mog.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <thread>

#include "fld/errors.hpp"

namespace fld {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);
constexpr std::size_t kRowChunk = 256;

// Log-density of an isotropic Gaussian given squared distance and log variance.
inline double log_normal(double sq_dist, double log_var, double inv_var,
                         double half_d) {
  const double quad = sq_dist == 0.0 ? 0.0 : sq_dist * inv_var;
  return -half_d * (kLog2Pi + log_var) - 0.5 * quad;
}

void check_log_var(const Vector& log_var, std::size_t m) {
  if (static_cast<std::size_t>(log_var.size()) != m) {
    throw DimensionError("log_var has " + std::to_string(log_var.size()) +
                         " entries for " + std::to_string(m) + " components");
  }
  for (Eigen::Index j = 0; j < log_var.size(); ++j) {
    if (!std::isfinite(log_var(j))) {
      throw NumericalError("non-finite log variance at component " +
                               std::to_string(j),
                           j);
    }
  }
}

}  // namespace

void FitConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) ||
      !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
  if (!std::isfinite(base_likelihood_scale) || base_likelihood_scale < 0.0) {
    throw ConfigError("base_likelihood_scale must be finite and non-negative");
  }
  if (init_rule == InitRule::Constant && !(init_value > 0.0)) {
    throw ConfigError("constant initial variance must be positive");
  }
  if (threads < 1) throw ConfigError("threads must be at least 1");
}

Vector init_variances(const FeatureMatrix& centers, const FeatureMatrix& train,
                      InitRule rule, double init_value) {
  require_same_dim(centers, train);
  const auto m = static_cast<Eigen::Index>(centers.rows());
  if (rule == InitRule::Constant) {
    if (!(init_value > 0.0)) throw ConfigError("initial variance must be positive");
    return Vector::Constant(m, std::log(init_value));
  }
  const Vector nearest = nearest_sq_dist(centers, train);
  const double d = static_cast<double>(centers.dim());
  Vector log_var(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    log_var(j) = std::log(std::max(nearest(j) / d, kVarianceFloor));
  }
  return log_var;
}

BaseLikelihood compute_base_likelihood(const FeatureMatrix& train, double scale,
                                       BaseLikelihoodRule rule) {
  const double half_d = 0.5 * static_cast<double>(train.dim());
  const Vector sq_norm = train.data().rowwise().squaredNorm();
  Vector out(sq_norm.size());
  for (Eigen::Index i = 0; i < sq_norm.size(); ++i) {
    double sq_dist = scale * sq_norm(i);
    if (rule == BaseLikelihoodRule::LiteralDistance) sq_dist *= sq_dist;
    out(i) = -half_d * kLog2Pi - 0.5 * sq_dist;
  }
  return {std::move(out)};
}

BandwidthObjective::BandwidthObjective(const FeatureMatrix& centers,
                                       const FeatureMatrix& train,
                                       BaseLikelihood base, unsigned threads)
    : dist_(pairwise_sq_dist(train, centers).values),
      base_(std::move(base)),
      dim_(centers.dim()),
      threads_(std::max(threads, 1u)) {
  if (!base_.empty() &&
      static_cast<std::size_t>(base_.log_values.size()) != train.rows()) {
    throw DimensionError("base likelihood has " +
                         std::to_string(base_.log_values.size()) +
                         " entries for " + std::to_string(train.rows()) +
                         " train rows");
  }
}

ObjectiveValue BandwidthObjective::evaluate(const Vector& log_var) const {
  std::vector<std::size_t> rows(train_rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return evaluate(log_var, rows);
}

ObjectiveValue BandwidthObjective::evaluate(
    const Vector& log_var, std::span<const std::size_t> rows) const {
  const std::size_t m = components();
  check_log_var(log_var, m);
  if (rows.empty()) throw DataError("objective over an empty batch");

  const double half_d = 0.5 * static_cast<double>(dim_);
  const double log_m = std::log(static_cast<double>(m));
  const Vector inv_var = (-log_var.array()).exp();

  // Rows are split into fixed chunks; each chunk accumulates its own partial
  // sums, which are then reduced in chunk order. The result is therefore
  // identical for any thread count.
  const std::size_t n_chunks = (rows.size() + kRowChunk - 1) / kRowChunk;
  std::vector<double> chunk_value(n_chunks, 0.0);
  std::vector<Vector> chunk_grad(n_chunks, Vector::Zero(static_cast<Eigen::Index>(m)));

  auto run_chunk = [&](std::size_t c) {
    std::vector<double> terms(m);
    double value = 0.0;
    Vector& grad = chunk_grad[c];
    const std::size_t lo = c * kRowChunk;
    const std::size_t hi = std::min(rows.size(), lo + kRowChunk);
    for (std::size_t r = lo; r < hi; ++r) {
      const auto i = static_cast<Eigen::Index>(rows[r]);
      double top = base_.empty() ? -std::numeric_limits<double>::infinity()
                                 : base_.log_values(i);
      for (std::size_t j = 0; j < m; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        terms[j] = log_normal(dist_(i, jj), log_var(jj), inv_var(jj), half_d) - log_m;
        top = std::max(top, terms[j]);
      }
      if (!std::isfinite(top)) {
        throw NumericalError("train row " + std::to_string(i) +
                             " has zero likelihood under every component");
      }
      double sum = base_.empty() ? 0.0 : std::exp(base_.log_values(i) - top);
      for (std::size_t j = 0; j < m; ++j) {
        terms[j] = std::exp(terms[j] - top);
        sum += terms[j];
      }
      value += top + std::log(sum);
      for (std::size_t j = 0; j < m; ++j) {
        if (terms[j] == 0.0) continue;
        const auto jj = static_cast<Eigen::Index>(j);
        const double d_ij = dist_(i, jj);
        const double quad = d_ij == 0.0 ? 0.0 : d_ij * inv_var(jj);
        grad(jj) += (terms[j] / sum) * (0.5 * quad - half_d);
      }
    }
    chunk_value[c] = value;
  };

  if (threads_ <= 1 || n_chunks <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(threads_, n_chunks));
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      pool.reserve(workers);
      for (unsigned t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
          try {
            for (std::size_t c = t; c < n_chunks; c += workers) run_chunk(c);
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  const double scale = -1.0 / static_cast<double>(rows.size());
  ObjectiveValue out;
  out.gradient = Vector::Zero(static_cast<Eigen::Index>(m));
  double total = 0.0;
  for (std::size_t c = 0; c < n_chunks; ++c) {
    total += chunk_value[c];
    out.gradient += chunk_grad[c];
  }
  out.value = scale * total;
  out.gradient *= scale;
  if (!std::isfinite(out.value)) {
    throw NumericalError("non-finite training objective");
  }
  for (Eigen::Index j = 0; j < out.gradient.size(); ++j) {
    if (!std::isfinite(out.gradient(j))) {
      throw NumericalError("non-finite gradient at component " + std::to_string(j), j);
    }
  }
  return out;
}

ObjectiveValue train_nll_objective(const MoGModel& model,
                                   const FeatureMatrix& train,
                                   const BaseLikelihood& base) {
  return BandwidthObjective(model.centers, train, base).evaluate(model.log_var);
}

MoGModel fit(const FeatureMatrix& centers, const FeatureMatrix& train,
             const FitConfig& cfg) {
  cfg.validate();
  Vector init = init_variances(centers, train, cfg.init_rule, cfg.init_value);
  return fit_from(centers, train, cfg, std::move(init));
}

MoGModel fit_from(const FeatureMatrix& centers, const FeatureMatrix& train,
                  const FitConfig& cfg, Vector initial_log_var) {
  cfg.validate();
  require_same_dim(centers, train);
  check_log_var(initial_log_var, centers.rows());

  const BandwidthObjective objective(
      centers, train,
      compute_base_likelihood(train, cfg.base_likelihood_scale, cfg.base_rule),
      cfg.threads);

  const auto m = static_cast<Eigen::Index>(centers.rows());
  const std::size_t n = train.rows();
  Vector log_var = std::move(initial_log_var);
  Vector first = Vector::Zero(m);
  Vector second = Vector::Zero(m);
  double beta1_pow = 1.0;
  double beta2_pow = 1.0;
  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(cfg.epochs) + 1);

  auto adam_step = [&](const Vector& grad) {
    beta1_pow *= cfg.adam_beta1;
    beta2_pow *= cfg.adam_beta2;
    first = cfg.adam_beta1 * first + (1.0 - cfg.adam_beta1) * grad;
    second = cfg.adam_beta2 * second +
             (1.0 - cfg.adam_beta2) * grad.array().square().matrix();
    const double c1 = 1.0 - beta1_pow;
    const double c2 = 1.0 - beta2_pow;
    log_var.array() -= cfg.lr * (first.array() / c1) /
                       ((second.array() / c2).sqrt() + cfg.adam_eps);
  };

  auto evaluate_all = [&]() {
    try {
      return objective.evaluate(log_var);
    } catch (const NumericalError& e) {
      throw FitError(std::string("bandwidth fit diverged: ") + e.what(), trace,
                     e.component());
    }
  };

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  if (cfg.batch_size >= n) {
    ObjectiveValue current = evaluate_all();
    trace.push_back(current.value);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      adam_step(current.gradient);
      current = evaluate_all();
      trace.push_back(current.value);
    }
  } else {
    std::mt19937_64 rng(cfg.seed);
    trace.push_back(evaluate_all().value);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < n; start += cfg.batch_size) {
        const std::size_t len = std::min(cfg.batch_size, n - start);
        ObjectiveValue batch;
        try {
          batch = objective.evaluate(
              log_var, std::span<const std::size_t>(order).subspan(start, len));
        } catch (const NumericalError& e) {
          throw FitError(std::string("bandwidth fit diverged: ") + e.what(),
                         trace, e.component());
        }
        adam_step(batch.gradient);
      }
      trace.push_back(evaluate_all().value);
    }
  }

  return MoGModel{centers, std::move(log_var), std::move(trace)};
}

Vector log_likelihood(const MoGModel& model, const FeatureMatrix& query) {
  require_same_dim(model.centers, query);
  check_log_var(model.log_var, model.components());
  const std::size_t m = model.components();
  const double half_d = 0.5 * static_cast<double>(model.dim());
  const double log_m = std::log(static_cast<double>(m));
  const Vector inv_var = (-model.log_var.array()).exp();
  const RowMatrix& C = model.centers.data();
  const RowMatrix& Q = query.data();

  Vector out(Q.rows());
  std::vector<double> terms(m);
  for (Eigen::Index i = 0; i < Q.rows(); ++i) {
    const Vector sq = (C.rowwise() - Q.row(i)).rowwise().squaredNorm();
    for (std::size_t j = 0; j < m; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      terms[j] = log_normal(sq(jj), model.log_var(jj), inv_var(jj), half_d);
    }
    out(i) = logsumexp(terms) - log_m;
  }
  return out;
}

Vector per_component_max_train_density(const MoGModel& model,
                                       const FeatureMatrix& train) {
  require_same_dim(model.centers, train);
  check_log_var(model.log_var, model.components());
  const double half_d = 0.5 * static_cast<double>(model.dim());
  const Vector nearest = nearest_sq_dist(model.centers, train);
  Vector out(nearest.size());
  for (Eigen::Index j = 0; j < nearest.size(); ++j) {
    out(j) = log_normal(nearest(j), model.log_var(j), std::exp(-model.log_var(j)),
                        half_d);
  }
  return out;
}

}  // namespace fld
