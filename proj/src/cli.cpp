#include "fld/cli.hpp"

#include <chrono>
#include <filesystem>
#include <optional>

#include "CLI11.hpp"
#include "fld/errors.hpp"
#include "fld/io.hpp"
#include "fld/pipeline.hpp"
#include "fld/seed.hpp"
#include "fld/synthetic.hpp"

namespace fld {

namespace {

constexpr std::size_t kWarnGenRows = 1000;
constexpr std::size_t kWarnTestRows = 500;

struct DataArgs {
  std::string train;
  std::string test;
  std::string gen;
};

struct FitArgs {
  FitConfig fit;
  bool no_standardize = false;
  std::uint64_t seed = 0;
  bool calibrate = false;
  std::optional<double> constant;
  std::string base_rule = "scaled";
  std::optional<double> init_variance;
};

void add_data_options(CLI::App* cmd, DataArgs& a, bool with_gen = true) {
  cmd->add_option("--train", a.train, "Train feature file (.fvec or .csv)")->required();
  cmd->add_option("--test", a.test, "Test feature file (.fvec or .csv)")->required();
  if (with_gen) {
    cmd->add_option("--gen", a.gen, "Generated feature file (.fvec or .csv)")->required();
  }
}

void add_fit_options(CLI::App* cmd, FitArgs& a, bool with_calibration) {
  cmd->add_flag("--no-standardize", a.no_standardize,
                "Use raw features instead of train-standardized ones");
  cmd->add_option("--lr", a.fit.lr, "Adam learning rate on log-variances")
      ->capture_default_str();
  cmd->add_option("--epochs", a.fit.epochs, "Optimization epochs")->capture_default_str();
  cmd->add_option("--batch-size", a.fit.batch_size, "Train rows per Adam step")
      ->capture_default_str();
  cmd->add_option("--base-scale", a.fit.base_likelihood_scale,
                  "Scale of the per-sample base likelihood")
      ->capture_default_str();
  cmd->add_option("--base-rule", a.base_rule,
                  "Base likelihood distance reading: scaled | literal")
      ->check(CLI::IsMember({"scaled", "literal"}))
      ->capture_default_str();
  cmd->add_option("--init-variance", a.init_variance,
                  "Constant initial variance (default: nearest train distance / d)");
  cmd->add_option("--threads", a.fit.threads, "Objective worker threads")
      ->capture_default_str();
  cmd->add_option("--seed", a.seed, "Global seed")->capture_default_str();
  if (with_calibration) {
    auto* cal = cmd->add_flag("--calibrate", a.calibrate,
                              "Estimate C from a train half-split (default)");
    auto* cst = cmd->add_option("--constant", a.constant, "Use a fixed constant C");
    cal->excludes(cst);
  }
}

EvalOptions eval_options(const FitArgs& a) {
  EvalOptions o;
  o.fit = a.fit;
  o.fit.base_rule = a.base_rule == "literal" ? BaseLikelihoodRule::LiteralDistance
                                             : BaseLikelihoodRule::ScaledSquaredNorm;
  if (a.init_variance) {
    o.fit.init_rule = InitRule::Constant;
    o.fit.init_value = *a.init_variance;
  }
  o.standardize = !a.no_standardize;
  o.seed = a.seed;
  if (a.constant) {
    o.calibration = CalibrationMode::Constant;
    o.constant = *a.constant;
  }
  return o;
}

void warn_sizes(const DatasetBundle& data, std::ostream& err) {
  if (data.gen.rows() < kWarnGenRows) {
    err << "warning: only " << data.gen.rows() << " generated rows (recommended >= "
        << kWarnGenRows << ")\n";
  }
  if (data.test.rows() < kWarnTestRows) {
    err << "warning: only " << data.test.rows() << " test rows (recommended >= "
        << kWarnTestRows << ")\n";
  }
}

void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
  } else {
    write_file(out_path, text);
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Feature likelihood divergence and baseline metrics for generative models"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // fld
  DataArgs fld_data;
  FitArgs fld_fit;
  std::string fld_out;
  bool fld_timings = false;
  bool fld_baselines = false;
  auto* fld_cmd = app.add_subcommand("fld", "Compute FLD and its generalization gap");
  add_data_options(fld_cmd, fld_data);
  add_fit_options(fld_cmd, fld_fit, true);
  fld_cmd->add_flag("--with-baselines", fld_baselines, "Also compute the baseline metrics");
  fld_cmd->add_flag("--timings", fld_timings, "Embed per-stage wall-clock timings");
  fld_cmd->add_option("--out", fld_out, "Report path (default: stdout)");

  // rank
  DataArgs rank_data;
  FitArgs rank_fit;
  std::string rank_kind;
  std::size_t rank_top = 0;
  std::string rank_out;
  std::optional<double> rank_log_delta;
  auto* rank_cmd = app.add_subcommand("rank", "Rank generated samples by memorization or fidelity");
  add_data_options(rank_cmd, rank_data);
  add_fit_options(rank_cmd, rank_fit, false);
  rank_cmd->add_option("--kind", rank_kind, "memorization | fidelity")
      ->required()
      ->check(CLI::IsMember({"memorization", "fidelity"}));
  rank_cmd->add_option("--top", rank_top, "Rows to emit (0 = all)")->capture_default_str();
  rank_cmd->add_option("--log-delta", rank_log_delta,
                       "Memorization threshold on log O_j (reports the flagged count)");
  rank_cmd->add_option("--out", rank_out, "CSV path (default: stdout)");

  // baselines
  DataArgs base_data;
  int base_k = kDefaultPrecisionRecallK;
  std::string base_out;
  auto* base_cmd = app.add_subcommand("baselines", "FID, precision/recall, C_T and AuthPct");
  add_data_options(base_cmd, base_data);
  base_cmd->add_option("--k", base_k, "Neighbourhood size for precision/recall")
      ->capture_default_str();
  base_cmd->add_option("--out", base_out, "Report path (default: stdout)");

  // synth
  std::string synth_name;
  std::vector<double> synth_grid;
  std::optional<std::size_t> synth_m;
  TwoMoonsConfig synth_moons;
  double synth_jitter = 1e-4;
  bool synth_no_baselines = false;
  FitArgs synth_fit;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Run a two-moons experiment sweep");
  synth_cmd->add_option("--experiment", synth_name, "kde-ushape | copy-injection | duplication")
      ->required()
      ->check(CLI::IsMember({"kde-ushape", "copy-injection", "duplication"}));
  synth_cmd->add_option("--grid", synth_grid, "Comma-separated knob values")->delimiter(',');
  synth_cmd->add_option("--m", synth_m, "Generated samples per grid point");
  synth_cmd->add_option("--n-total", synth_moons.n_total, "Two-moons points")->capture_default_str();
  synth_cmd->add_option("--noise", synth_moons.noise, "Two-moons noise")->capture_default_str();
  synth_cmd->add_option("--n-train", synth_moons.n_train, "Train rows")->capture_default_str();
  synth_cmd->add_option("--n-test", synth_moons.n_test, "Test rows")->capture_default_str();
  synth_cmd->add_option("--jitter-var", synth_jitter, "Copy/duplicate jitter variance")
      ->capture_default_str();
  synth_cmd->add_flag("--no-baselines", synth_no_baselines, "Skip baseline metrics");
  add_fit_options(synth_cmd, synth_fit, true);
  synth_cmd->add_option("--out", synth_out, "CSV path (default: stdout)");

  // calibrate
  DataArgs cal_data;
  FitArgs cal_fit;
  auto* cal_cmd = app.add_subcommand("calibrate", "Estimate the calibration constant C");
  add_data_options(cal_cmd, cal_data, false);
  add_fit_options(cal_cmd, cal_fit, false);

  // moons
  TwoMoonsConfig moons_cfg;
  std::string moons_dir;
  std::string moons_gen = "iid";
  double moons_bandwidth = 0.1;
  std::size_t moons_m = 1000;
  std::size_t moons_copies = 0;
  std::string moons_format = "fvec";
  auto* moons_cmd = app.add_subcommand("moons", "Write two-moons train/test/gen feature files");
  moons_cmd->add_option("--out-dir", moons_dir, "Output directory")->required();
  moons_cmd->add_option("--n-total", moons_cfg.n_total, "Points drawn")->capture_default_str();
  moons_cmd->add_option("--noise", moons_cfg.noise, "Noise std. dev.")->capture_default_str();
  moons_cmd->add_option("--n-train", moons_cfg.n_train, "Train rows")->capture_default_str();
  moons_cmd->add_option("--n-test", moons_cfg.n_test, "Test rows")->capture_default_str();
  moons_cmd->add_option("--seed", moons_cfg.seed, "Seed")->capture_default_str();
  moons_cmd->add_option("--gen", moons_gen, "iid | kde")
      ->check(CLI::IsMember({"iid", "kde"}))
      ->capture_default_str();
  moons_cmd->add_option("--bandwidth", moons_bandwidth, "KDE bandwidth")->capture_default_str();
  moons_cmd->add_option("--m", moons_m, "Generated rows")->capture_default_str();
  moons_cmd->add_option("--copies", moons_copies, "Leading generated rows replaced by jittered train copies")
      ->capture_default_str();
  moons_cmd->add_option("--format", moons_format, "fvec | csv")
      ->check(CLI::IsMember({"fvec", "csv"}))
      ->capture_default_str();

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.emplace_back("fld");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitConfig;
  }

  try {
    if (*fld_cmd) {
      const DatasetBundle data = load_bundle(fld_data.train, fld_data.test, fld_data.gen);
      warn_sizes(data, err);
      EvalOptions o = eval_options(fld_fit);
      o.compute_baselines = fld_baselines;
      o.record_timings = fld_timings;
      const MetricReport report = evaluate(data.train, data.test, data.gen, o);
      nlohmann::json doc = report_json(report);
      doc["command"] = "fld";
      doc["inputs"] = manifest_json(data.manifest);
      emit(dump_json(doc), fld_out, out);
    } else if (*rank_cmd) {
      const DatasetBundle data = load_bundle(rank_data.train, rank_data.test, rank_data.gen);
      warn_sizes(data, err);
      const EvalOptions o = eval_options(rank_fit);
      const FitConfig cfg = seeded_fit_config(o);
      std::optional<StandardizedSplits> scaled;
      if (o.standardize) scaled = standardize_splits(data.train, data.test, data.gen);
      const FeatureMatrix& tr = scaled ? scaled->train : data.train;
      const FeatureMatrix& te = scaled ? scaled->test : data.test;
      const FeatureMatrix& ge = scaled ? scaled->gen : data.gen;
      SampleRanking ranking =
          rank_kind == "memorization"
              ? memorization_ranking(fit(ge, tr, cfg), tr, rank_log_delta)
              : fidelity_ranking(ge, te, tr, cfg);
      if (ranking.log_threshold) {
        err << ranking.flagged_count() << " of " << ranking.order.size()
            << " generated samples exceed log-delta " << format_double(*ranking.log_threshold)
            << "\n";
      }
      emit(ranking_csv(ranking, data.gen, rank_top), rank_out, out);
    } else if (*base_cmd) {
      const DatasetBundle data = load_bundle(base_data.train, base_data.test, base_data.gen);
      warn_sizes(data, err);
      EvalOptions o;
      o.compute_fld = false;
      o.compute_baselines = true;
      o.pr_k = base_k;
      const MetricReport report = evaluate(data.train, data.test, data.gen, o);
      nlohmann::json doc = {
          {"format", "fld-report/1"},
          {"command", "baselines"},
          {"dim", report.dim},
          {"rows", {{"train", report.n_train}, {"test", report.n_test}, {"gen", report.n_gen}}},
          {"config", {{"pr_k", base_k}}},
          {"inputs", manifest_json(data.manifest)},
          {"baselines", baselines_json(*report.baselines)},
      };
      emit(dump_json(doc), base_out, out);
    } else if (*synth_cmd) {
      const ExperimentKind kind = parse_experiment(synth_name);
      ExperimentParams p = ExperimentParams::defaults(kind);
      if (!synth_grid.empty()) p.grid = synth_grid;
      if (synth_m) p.m = *synth_m;
      p.moons = synth_moons;
      p.jitter_var = synth_jitter;
      p.eval = eval_options(synth_fit);
      p.eval.compute_baselines = !synth_no_baselines;
      p.seed = synth_fit.seed;
      emit(table_csv(run_experiment(kind, p)), synth_out, out);
    } else if (*cal_cmd) {
      FeatureMatrix train = read_features(cal_data.train, Role::Train);
      FeatureMatrix test = read_features(cal_data.test, Role::Test);
      require_same_dim(train, test);
      const EvalOptions o = eval_options(cal_fit);
      if (o.standardize) {
        const StandardizationParams params = fit_standardizer(train);
        test = apply_standardizer(params, test);
        train = apply_standardizer(params, train);
      }
      const CalibrationConstant c =
          calibrate(train, test, seeded_fit_config(o),
                    derive_seed(o.seed, SeedStream::CalibrationSplit));
      out << format_double(c.c_value) << "\n";
    } else if (*moons_cmd) {
      const TwoMoonsSplit data = two_moons(moons_cfg);
      const std::uint64_t gen_seed = derive_seed(moons_cfg.seed, SeedStream::Synthetic);
      FeatureMatrix gen =
          moons_gen == "kde"
              ? kde_generator(data.train.points, moons_bandwidth, moons_m, gen_seed)
              : sample_two_moons(moons_m, moons_cfg.noise, gen_seed, Role::Generated).points;
      if (moons_copies > 0) {
        gen = apply_perturbation(gen, data.train.points,
                                 {CopyTrain{moons_copies, 1e-4}, splitmix64(gen_seed)});
      }
      const std::filesystem::path dir(moons_dir);
      std::filesystem::create_directories(dir);
      const std::string ext = moons_format == "csv" ? ".csv" : ".fvec";
      write_features(data.train.points, dir / ("train" + ext));
      write_features(data.test.points, dir / ("test" + ext));
      write_features(gen, dir / ("gen" + ext));
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace fld
