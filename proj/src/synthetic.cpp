#include "fld/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <limits>
#include <random>

#include "fld/errors.hpp"
#include "fld/seed.hpp"

namespace fld {

namespace {

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + step * static_cast<double>(i);
  return out;
}

void add_gaussian_noise(RowMatrix& x, double stdev, std::mt19937_64& rng) {
  if (stdev == 0.0) return;
  std::normal_distribution<double> normal(0.0, stdev);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index k = 0; k < x.cols(); ++k) x(i, k) += normal(rng);
  }
}

LabeledSample take_rows(const LabeledSample& all, std::size_t start,
                        std::size_t count, Role role) {
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), start);
  return {all.points.select(idx).with_role(role),
          std::vector<int>(all.labels.begin() + static_cast<std::ptrdiff_t>(start),
                           all.labels.begin() + static_cast<std::ptrdiff_t>(start + count))};
}

}  // namespace

LabeledSample sample_two_moons(std::size_t n, double noise, std::uint64_t seed,
                               Role role) {
  if (n < 1) throw ConfigError("two-moons needs at least one point");
  if (!(noise >= 0.0)) throw ConfigError("two-moons noise must be non-negative");
  const std::size_t n_upper = n / 2;
  const std::size_t n_lower = n - n_upper;

  RowMatrix points(static_cast<Eigen::Index>(n), 2);
  std::vector<int> labels(n);
  Eigen::Index row = 0;
  for (double t : linspace(0.0, std::numbers::pi, n_upper)) {
    points(row, 0) = std::cos(t);
    points(row, 1) = std::sin(t);
    labels[static_cast<std::size_t>(row++)] = 0;
  }
  for (double t : linspace(0.0, std::numbers::pi, n_lower)) {
    points(row, 0) = 1.0 - std::cos(t);
    points(row, 1) = 0.5 - std::sin(t);
    labels[static_cast<std::size_t>(row++)] = 1;
  }

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  RowMatrix shuffled(points.rows(), 2);
  std::vector<int> shuffled_labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    shuffled.row(static_cast<Eigen::Index>(i)) =
        points.row(static_cast<Eigen::Index>(perm[i]));
    shuffled_labels[i] = labels[perm[i]];
  }
  add_gaussian_noise(shuffled, noise, rng);
  return {FeatureMatrix(std::move(shuffled), role), std::move(shuffled_labels)};
}

TwoMoonsSplit two_moons(const TwoMoonsConfig& cfg) {
  if (cfg.n_train < 1 || cfg.n_test < 1 || cfg.n_train + cfg.n_test > cfg.n_total) {
    throw ConfigError("two-moons split must satisfy 1 <= n_train, 1 <= n_test, "
                      "n_train + n_test <= n_total");
  }
  const LabeledSample all = sample_two_moons(cfg.n_total, cfg.noise, cfg.seed);
  return {take_rows(all, 0, cfg.n_train, Role::Train),
          take_rows(all, cfg.n_train, cfg.n_test, Role::Test)};
}

FeatureMatrix kde_generator(const FeatureMatrix& train, double bandwidth,
                            std::size_t m, std::uint64_t seed) {
  if (!(bandwidth > 0.0)) throw ConfigError("KDE bandwidth must be positive");
  if (m < 1) throw ConfigError("KDE sample count must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, train.rows() - 1);
  std::normal_distribution<double> normal(0.0, bandwidth);
  RowMatrix out(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(train.dim()));
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const auto src = static_cast<Eigen::Index>(pick(rng));
    for (Eigen::Index k = 0; k < out.cols(); ++k) {
      out(i, k) = train.data()(src, k) + normal(rng);
    }
  }
  return FeatureMatrix(std::move(out), Role::Generated);
}

FeatureMatrix apply_perturbation(const FeatureMatrix& gen,
                                 const FeatureMatrix& train,
                                 const PerturbationSpec& spec) {
  require_same_dim(gen, train);
  std::mt19937_64 rng(spec.seed);
  const std::size_t m = gen.rows();

  if (const auto* copy = std::get_if<CopyTrain>(&spec.kind)) {
    if (copy->k > m || copy->k > train.rows()) {
      throw ConfigError("CopyTrain k=" + std::to_string(copy->k) +
                        " exceeds generated (" + std::to_string(m) + ") or train (" +
                        std::to_string(train.rows()) + ") size");
    }
    if (!(copy->jitter_var >= 0.0)) throw ConfigError("jitter variance must be >= 0");
    RowMatrix out = gen.data();
    const auto k = static_cast<Eigen::Index>(copy->k);
    out.topRows(k) = train.data().topRows(k);
    RowMatrix jitter = RowMatrix::Zero(k, out.cols());
    add_gaussian_noise(jitter, std::sqrt(copy->jitter_var), rng);
    out.topRows(k) += jitter;
    return FeatureMatrix(std::move(out), gen.role(), gen.ids());
  }

  if (const auto* dup = std::get_if<DuplicateGen>(&spec.kind)) {
    if (dup->factor < 1 || dup->factor > m) {
      throw ConfigError("DuplicateGen factor must lie in [1, " + std::to_string(m) + "]");
    }
    if (!(dup->jitter_var >= 0.0)) throw ConfigError("jitter variance must be >= 0");
    const std::size_t distinct = (m + dup->factor - 1) / dup->factor;
    RowMatrix out = gen.data();
    const double stdev = std::sqrt(dup->jitter_var);
    std::normal_distribution<double> normal(0.0, stdev > 0.0 ? stdev : 1.0);
    for (std::size_t r = distinct; r < m; ++r) {
      out.row(static_cast<Eigen::Index>(r)) =
          gen.data().row(static_cast<Eigen::Index>(r % distinct));
      if (stdev > 0.0) {
        for (Eigen::Index k = 0; k < out.cols(); ++k) {
          out(static_cast<Eigen::Index>(r), k) += normal(rng);
        }
      }
    }
    return FeatureMatrix(std::move(out), gen.role());
  }

  if (const auto* drop = std::get_if<DropModes>(&spec.kind)) {
    if (drop->labels.size() != m) {
      throw ConfigError("DropModes needs one label per generated row");
    }
    std::vector<std::size_t> kept;
    for (std::size_t r = 0; r < m; ++r) {
      if (std::find(drop->keep_labels.begin(), drop->keep_labels.end(),
                    drop->labels[r]) != drop->keep_labels.end()) {
        kept.push_back(r);
      }
    }
    if (kept.empty()) throw ConfigError("DropModes keeps no generated rows");
    std::uniform_int_distribution<std::size_t> pick(0, kept.size() - 1);
    std::vector<std::size_t> rows(m);
    for (auto& r : rows) r = kept[pick(rng)];
    return gen.select(rows);
  }

  const auto& noise = std::get<GaussianNoise>(spec.kind);
  if (!(noise.var >= 0.0)) throw ConfigError("noise variance must be >= 0");
  RowMatrix out = gen.data();
  add_gaussian_noise(out, std::sqrt(noise.var), rng);
  return FeatureMatrix(std::move(out), gen.role(), gen.ids());
}

ExperimentKind parse_experiment(std::string_view name) {
  if (name == "kde-ushape") return ExperimentKind::KdeUShape;
  if (name == "copy-injection") return ExperimentKind::CopyInjection;
  if (name == "duplication") return ExperimentKind::DuplicationDiversity;
  throw ConfigError("unknown experiment '" + std::string(name) +
                    "' (expected kde-ushape, copy-injection or duplication)");
}

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::KdeUShape:
      return "kde-ushape";
    case ExperimentKind::CopyInjection:
      return "copy-injection";
    case ExperimentKind::DuplicationDiversity:
      return "duplication";
  }
  return "unknown";
}

std::vector<double> default_grid(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::KdeUShape:
      return {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
    case ExperimentKind::CopyInjection:
      return {0.0, 0.25, 0.5, 0.75, 1.0};
    case ExperimentKind::DuplicationDiversity:
      return {1.0, 2.0, 4.0, 8.0};
  }
  return {};
}

ExperimentParams ExperimentParams::defaults(ExperimentKind kind) {
  ExperimentParams p;
  p.grid = default_grid(kind);
  p.eval.compute_baselines = true;
  if (kind == ExperimentKind::CopyInjection) p.m = 200;
  return p;
}

std::size_t ExperimentTable::column(std::string_view name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw ConfigError("no column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> ExperimentTable::values(std::string_view name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row[c]);
  return out;
}

ExperimentTable run_experiment(ExperimentKind kind, const ExperimentParams& params) {
  const std::vector<double> grid = params.grid.empty() ? default_grid(kind) : params.grid;
  const std::uint64_t data_seed = derive_seed(params.seed, SeedStream::Synthetic);
  TwoMoonsConfig moons_cfg = params.moons;
  moons_cfg.seed = data_seed;
  const TwoMoonsSplit data = two_moons(moons_cfg);
  const FeatureMatrix& train = data.train.points;
  const FeatureMatrix& test = data.test.points;

  // The calibration constant depends on train and test only, so it is
  // estimated once and shared by every grid point.
  EvalOptions eval = params.eval;
  eval.compute_fld = true;
  if (eval.calibration == CalibrationMode::Calibrate) {
    const FeatureMatrix tr = eval.standardize
                                 ? apply_standardizer(fit_standardizer(train), train)
                                 : train;
    const FeatureMatrix te = eval.standardize
                                 ? apply_standardizer(fit_standardizer(train), test)
                                 : test;
    eval.constant = calibrate(tr, te, seeded_fit_config(eval),
                              derive_seed(params.seed, SeedStream::CalibrationSplit))
                        .c_value;
    eval.calibration = CalibrationMode::Constant;
  }

  // Generated sets that are perturbed along the grid start from the same
  // i.i.d. draw from the data distribution.
  const FeatureMatrix base_gen =
      sample_two_moons(params.m, params.moons.noise, splitmix64(data_seed),
                       Role::Generated)
          .points;

  ExperimentTable table;
  table.columns = {"knob",      "fld_test", "fld_train", "gen_gap",
                   "raw_nll_test", "fid_train", "fid_test", "fid_gap",
                   "precision", "recall",   "c_t",       "auth_pct"};

  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double knob = grid[i];
    const std::uint64_t point_seed = params.seed + i;
    FeatureMatrix gen = base_gen;
    switch (kind) {
      case ExperimentKind::KdeUShape:
        gen = kde_generator(train, knob, params.m, point_seed);
        break;
      case ExperimentKind::CopyInjection: {
        if (knob < 0.0 || knob > 1.0) {
          throw ConfigError("copy fraction must lie in [0, 1]");
        }
        const auto k = static_cast<std::size_t>(
            std::llround(knob * static_cast<double>(params.m)));
        gen = apply_perturbation(base_gen, train,
                                 {CopyTrain{k, params.jitter_var}, point_seed});
        break;
      }
      case ExperimentKind::DuplicationDiversity: {
        if (knob < 1.0) throw ConfigError("duplication factor must be >= 1");
        const auto factor = static_cast<std::size_t>(std::llround(knob));
        gen = apply_perturbation(base_gen, train,
                                 {DuplicateGen{factor, params.jitter_var}, point_seed});
        break;
      }
    }

    EvalOptions point_eval = eval;
    point_eval.seed = point_seed;
    const MetricReport report = evaluate(train, test, gen, point_eval);
    const FldResult& f = *report.fld;
    std::vector<double> row = {knob, f.fld_test, f.fld_train, f.gen_gap, f.raw_nll_test};
    if (report.baselines) {
      const BaselineReport& b = *report.baselines;
      row.insert(row.end(), {b.fid_train, b.fid_test, b.fid_gap, b.precision,
                             b.recall, b.c_t, b.auth_pct});
    } else {
      row.resize(table.columns.size(), std::numeric_limits<double>::quiet_NaN());
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace fld
