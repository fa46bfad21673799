#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fld/pipeline.hpp"
#include "fld/tensor.hpp"

namespace fld {

struct TwoMoonsConfig {
  std::size_t n_total = 3000;
  double noise = 0.1;
  std::size_t n_train = 2000;
  std::size_t n_test = 1000;
  std::uint64_t seed = 0;
};

struct LabeledSample {
  FeatureMatrix points;
  std::vector<int> labels;  // 0 = upper moon, 1 = lower moon
};

// Two interleaving unit half-circles: the upper arc (cos t, sin t) and the
// lower arc (1 - cos t, 0.5 - sin t), t in [0, pi], evenly spaced, shuffled,
// then perturbed by isotropic Gaussian noise.
LabeledSample sample_two_moons(std::size_t n, double noise, std::uint64_t seed,
                               Role role = Role::Train);

struct TwoMoonsSplit {
  LabeledSample train;
  LabeledSample test;
};

// First n_train shuffled points form train, the next n_test form test.
TwoMoonsSplit two_moons(const TwoMoonsConfig& cfg);

// Samples m points from a Gaussian KDE on `train`: a uniformly chosen train
// row plus N(0, bandwidth^2 I).
FeatureMatrix kde_generator(const FeatureMatrix& train, double bandwidth,
                            std::size_t m, std::uint64_t seed);

struct CopyTrain {
  std::size_t k = 0;
  double jitter_var = 1e-4;
};
struct DuplicateGen {
  std::size_t factor = 1;
  double jitter_var = 1e-4;
};
struct DropModes {
  std::vector<int> labels;       // one per generated row
  std::vector<int> keep_labels;  // rows with these labels survive
};
struct GaussianNoise {
  double var = 0.0;
};

struct PerturbationSpec {
  std::variant<CopyTrain, DuplicateGen, DropModes, GaussianNoise> kind;
  std::uint64_t seed = 0;
};

// CopyTrain: the first k rows become the first k train rows plus
//   N(0, jitter_var I).
// DuplicateGen: ceil(m / factor) distinct leading rows are tiled to length m;
//   repeats carry N(0, jitter_var I) jitter.
// DropModes: rows whose label is kept are resampled with replacement back to
//   m rows.
// GaussianNoise: N(0, var I) added to every row.
FeatureMatrix apply_perturbation(const FeatureMatrix& gen,
                                 const FeatureMatrix& train,
                                 const PerturbationSpec& spec);

enum class ExperimentKind { KdeUShape, CopyInjection, DuplicationDiversity };

ExperimentKind parse_experiment(std::string_view name);
std::string_view to_string(ExperimentKind kind);

struct ExperimentParams {
  TwoMoonsConfig moons;
  std::size_t m = 1000;           // generated samples per grid point
  std::vector<double> grid;       // knob values; empty means the default grid
  double jitter_var = 1e-4;       // copy / duplicate jitter
  std::uint64_t seed = 0;         // base seed; grid point i uses seed + i
  EvalOptions eval;

  static ExperimentParams defaults(ExperimentKind kind);
};

std::vector<double> default_grid(ExperimentKind kind);

struct ExperimentTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column(std::string_view name) const;
  std::vector<double> values(std::string_view name) const;
};

// Sweeps the experiment knob and records FLD, its generalization gap and the
// baseline metrics at each grid point.
ExperimentTable run_experiment(ExperimentKind kind, const ExperimentParams& params);

}  // namespace fld
