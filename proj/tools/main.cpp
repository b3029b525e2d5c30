// SPDX-License-Identifier: Apache-2.0
// bigan: ingest, train, impute, predict, benchmark and ablate.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "bigan/baselines.hpp"
#include "bigan/config.hpp"
#include "bigan/errors.hpp"
#include "bigan/evaluation.hpp"
#include "bigan/rng.hpp"
#include "bigan/synthetic.hpp"

namespace fs = std::filesystem;
using namespace bigan;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitDivergence = 4;

struct ConfigFlags {
  std::string path;
  bool defaults = false;
  std::vector<std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", path, "configuration file ([model], [train], [eval] sections)");
    cmd->add_flag("--defaults", defaults, "fill keys missing from the config file with their defaults");
    cmd->add_option("--set", overrides, "override one key, e.g. --set train.epochs=50 (repeatable)");
  }

  RunConfig load() const {
    ConfigSources sources;
    if (!path.empty()) sources.file = path;
    sources.allow_missing = defaults;
    sources.overrides = overrides;
    return load_config(sources);
  }
};

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void write_file(const fs::path& path, const std::string& body) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << body;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

void echo_config(const fs::path& dir, const RunConfig& config) { write_file(dir / "effective_config.ini", config.text()); }

/// Re-expresses `data` in the units of `norm` (the checkpoint's statistics).
Dataset align_to(Dataset data, const NormStats& norm) {
  if (data.features() != norm.mean.size()) {
    throw DataError("dataset has " + std::to_string(data.features()) + " features, checkpoint expects " +
                    std::to_string(norm.mean.size()));
  }
  if (data.normalized && data.norm.mean == norm.mean && data.norm.stddev == norm.stddev) return data;
  data = denormalize(std::move(data));
  for (auto& s : data.samples)
    for (std::size_t i = 0; i < s.steps(); ++i)
      for (std::size_t j = 0; j < s.features(); ++j)
        if (s.mask(i, j) == 1.0) s.values(i, j) = norm.normalize(j, s.values(i, j));
  data.norm = norm;
  data.normalized = true;
  return data;
}

std::vector<std::string> split_names(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

ImputerSpec make_spec(const std::string& name, const RunConfig& config) {
  if (name == "bigan") return {name, [c = config.train] { return ImputerPtr(new BiganImputer(c)); }};
  if (name == "mean") return {name, [] { return ImputerPtr(new MeanImputer()); }};
  if (name == "knn") return {name, [k = config.eval.knn_k] { return ImputerPtr(new KnnImputer(k)); }};
  if (name == "mice") return {name, [n = config.eval.mice_iter] { return ImputerPtr(new MiceImputer(n)); }};
  if (name == "interp") return {name, [] { return ImputerPtr(new InterpolationImputer()); }};
  throw ConfigError("unknown imputer '" + name + "' (expected bigan, mean, knn, mice or interp)");
}

bool use_split(const Dataset& data, const RunConfig& config) {
  if (config.eval.protocol == "split") return true;
  if (config.eval.protocol == "kfold") return false;
  return data.has_split(Split::test);
}

std::vector<EvalReport> run_protocol(const Dataset& data, std::span<const ImputerSpec> specs,
                                     std::span<const Setting> settings, const RunConfig& config,
                                     std::function<void(std::size_t, const Imputer&)> on_fit = {}) {
  ExperimentOptions options;
  options.folds = config.eval.folds;
  options.seed = config.eval.seed;
  options.config_hash = config.train.hash();
  options.on_fit = std::move(on_fit);
  return use_split(data, config) ? run_split(data, specs, settings, options)
                                 : run_kfold(data, specs, settings, options);
}

std::string cell(const EvalReport& r) {
  return format_number(r.mean_mae) + " (" + format_number(r.ci_half_width) + ")";
}

// Commands ---------------------------------------------------------------------------

struct IngestArgs {
  std::string input, format = "air-quality", out, target;
  std::size_t window = 20;
  bool raw = false;
};

void cmd_ingest(const IngestArgs& a) {
  Dataset data;
  if (a.format == "air-quality") {
    AirQualityOptions o;
    o.window = a.window;
    if (!a.target.empty()) o.target = a.target;
    o.normalize = !a.raw;
    data = load_air_quality_csv(a.input, o);
  } else if (a.format == "long-csv") {
    LongCsvOptions o;
    if (!a.target.empty()) o.target = a.target;
    o.normalize = !a.raw;
    data = load_long_csv(a.input, o);
  } else {
    throw ConfigError("unknown format '" + a.format + "' (expected air-quality or long-csv)");
  }
  ensure_parent(a.out);
  save_dataset(data, a.out);
  std::cerr << "ingested " << data.size() << " samples, n=" << data.steps() << ", d=" << data.features()
            << ", target=" << data.feature_names[data.target] << "\n";
  std::cerr << "missing fraction " << format_number(missing_fraction(data)) << " overall, "
            << format_number(missing_fraction(data, data.target)) << " on the target\n";
  for (const auto& n : data.notes) std::cerr << "note: " << n << "\n";
}

struct SynthArgs {
  std::string kind = "sinusoid", out, format = "dataset";
  SyntheticOptions options;
};

void cmd_synth(const SynthArgs& a) {
  Dataset data;
  if (a.kind == "sinusoid") {
    data = make_sinusoid_dataset(a.options);
  } else if (a.kind == "ar1") {
    data = make_ar1_dataset(a.options);
  } else if (a.kind == "stationary") {
    data = make_stationary_dataset(a.options);
  } else {
    throw ConfigError("unknown kind '" + a.kind + "' (expected sinusoid, ar1 or stationary)");
  }
  if (a.format == "dataset") {
    ensure_parent(a.out);
    save_dataset(data, a.out);
  } else if (a.format == "long-csv") {
    std::ostringstream ss;
    write_long_csv(data, ss);
    write_file(a.out, ss.str());
  } else {
    throw ConfigError("unknown format '" + a.format + "' (expected dataset or long-csv)");
  }
}

struct TrainArgs {
  std::string data, out, log;
  ConfigFlags config;
};

void cmd_train(const TrainArgs& a) {
  const RunConfig config = a.config.load();
  const Dataset data = load_dataset(a.data);
  const fs::path log_path = a.log.empty() ? fs::path(a.out + ".log.csv") : fs::path(a.log);
  std::ostringstream log;
  log << "# seed=" << config.train.seed << " config_hash=" << config.train.hash() << "\n" << kTrainLogHeader << "\n";
  TrainResult result;
  try {
    result = train(data, config.train, [&](const EpochLog& e) {
      log << e.csv() << "\n";
      std::cerr << e.csv() << "\n";
    });
  } catch (const DivergenceError&) {
    write_file(log_path, log.str());
    throw;
  }
  ensure_parent(a.out);
  save_checkpoint(result.checkpoint, a.out);
  write_file(log_path, log.str());
  const fs::path dir = fs::path(a.out).has_parent_path() ? fs::path(a.out).parent_path() : fs::path(".");
  echo_config(dir, config);
  std::cerr << "best epoch " << result.checkpoint.epoch << ", validation MAE " << format_number(result.checkpoint.val_mae)
            << (result.early_stopped ? " (early stop)" : "") << "\n";
}

struct ApplyArgs {
  std::string checkpoint, data, out, which = "auto";
  double rate = 0.1;
  std::size_t obs_len = 4;
  std::uint64_t seed = 42;
};

void cmd_apply(const ApplyArgs& a, bool prediction) {
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const Dataset data = align_to(load_dataset(a.data), ckpt.norm);
  if (data.target != ckpt.target) throw DataError("dataset target differs from the checkpoint's target");

  std::vector<std::size_t> which;
  if (a.which == "all" || (a.which == "auto" && !data.has_split(Split::test))) {
    for (std::size_t k = 0; k < data.size(); ++k) which.push_back(k);
  } else if (a.which == "auto") {
    which = data.indices(Split::test);
  } else {
    which = data.indices(parse_split(a.which));
  }

  const Setting setting = prediction ? Setting::prediction(a.obs_len) : Setting::imputation(a.rate);
  std::vector<CorruptionPlan> plans;
  CorruptedSet scored;
  for (std::size_t k : which) {
    const SeriesSample& s = data.samples[k];
    CorruptionPlan plan;
    if (!prediction && a.rate == 0.0) {
      plan = corrupt_steps(s, setting, a.seed, {});
    } else {
      try {
        plan = corrupt(s, setting, mix_seed(a.seed, k));
      } catch (const std::invalid_argument& e) {
        if (prediction) throw ConfigError(e.what());
        std::cerr << "warning: sample '" << s.id << "' left uncorrupted: " << e.what() << "\n";
        plan = corrupt_steps(s, setting, a.seed, {});
      }
    }
    if (plan.empty_window) std::cerr << "warning: sample '" << s.id << "' has no observed target in the prediction window\n";
    if (plan.eval_count() > 0) {
      scored.indices.push_back(k);
      scored.plans.push_back(plan);
    }
    plans.push_back(std::move(plan));
  }

  const BiganImputer imputer(ckpt);
  std::vector<SeriesSample> inputs;
  for (const auto& p : plans) inputs.push_back(p.corrupted);
  const auto filled = imputer.impute(inputs);

  std::ostringstream csv;
  csv << "sample_id,time,truth,imputed,flag,seed\n";
  for (std::size_t k = 0; k < plans.size(); ++k) {
    const SeriesSample& s = data.samples[which[k]];
    const CorruptionPlan& p = plans[k];
    for (std::size_t i = 0; i < s.steps(); ++i) {
      const bool observed = s.mask(i, s.target) == 1.0;
      const bool deleted = p.eval_mask[i] == 1.0;
      const char* flag = deleted ? "deleted-eval" : observed ? "observed" : "originally-missing";
      csv << s.id << ',' << format_number(s.grid[i]) << ','
          << (observed ? format_number(data.denormalize_target(p.truth[i])) : std::string()) << ','
          << format_number(data.denormalize_target(filled[k][i])) << ',' << flag << ',' << a.seed << '\n';
    }
  }
  write_file(a.out, csv.str());

  if (!scored.plans.empty()) {
    FoldResult fold = score(data, imputer, scored);
    EvalReport report;
    report.imputer = "bigan";
    report.setting = setting;
    report.protocol = "single";
    report.seed = a.seed;
    report.config_hash = ckpt.config_hash;
    report.mean_mae = fold.mae;
    report.ci_half_width = std::numeric_limits<double>::quiet_NaN();
    report.cells = fold.cells;
    report.folds.push_back(fold);
    const fs::path base = fs::path(a.out).replace_extension();
    write_file(base.string() + ".report.csv", report.csv());
    write_file(base.string() + ".report.txt", report.text());
    std::cerr << setting.label() << ": MAE " << format_number(fold.mae) << " over " << fold.cells << " cells\n";
  }
}

struct BenchArgs {
  std::string data, out, imputers, sweep = "none";
  ConfigFlags config;
};

void cmd_benchmark(const BenchArgs& a) {
  RunConfig config = a.config.load();
  if (!a.imputers.empty()) config.eval.imputers = a.imputers;
  const Dataset data = load_dataset(a.data);
  std::vector<ImputerSpec> specs;
  for (const auto& name : split_names(config.eval.imputers)) specs.push_back(make_spec(name, config));
  if (specs.empty()) throw ConfigError("no imputers selected");

  std::vector<Setting> settings;
  if (a.sweep == "missing") {
    settings = missing_rate_settings(config.eval.rates);
  } else if (a.sweep == "windows") {
    settings = window_settings(config.eval.obs_lengths);
  } else if (a.sweep == "none") {
    settings = {Setting::imputation(config.eval.rate), Setting::prediction(config.eval.obs_len)};
  } else {
    throw ConfigError("unknown sweep '" + a.sweep + "' (expected missing, windows or none)");
  }

  const auto reports = run_protocol(data, specs, settings, config);
  const fs::path dir = a.out;
  write_reports(reports, dir);
  write_file(dir / "summary.csv", summary_csv(reports));

  std::string table = "imputer";
  for (const auto& s : settings) table += "," + s.label() + "_mae," + s.label() + "_ci";
  table += "\n";
  for (std::size_t m = 0; m < specs.size(); ++m) {
    table += specs[m].name;
    for (std::size_t s = 0; s < settings.size(); ++s) {
      const EvalReport& r = reports[m * settings.size() + s];
      table += "," + format_number(r.mean_mae) + "," + format_number(r.ci_half_width);
    }
    table += "\n";
  }
  write_file(dir / "table.csv", table);
  echo_config(dir, config);
  std::cout << table;
}

struct AblateArgs {
  std::string data, out;
  ConfigFlags config;
};

void cmd_ablate(const AblateArgs& a) {
  const RunConfig config = a.config.load();
  const Dataset data = load_dataset(a.data);
  const fs::path dir = a.out;
  fs::create_directories(dir);

  struct Variant {
    std::string name;
    std::function<void(TrainConfig&)> apply;
  };
  const std::vector<Variant> variants = {
      {"full", [](TrainConfig&) {}},
      {"wasserstein", [](TrainConfig& c) { c.loss_mode = LossMode::wasserstein; }},
      {"no_lambda", [](TrainConfig& c) { c.no_lambda = true; }},
      {"no_gan", [](TrainConfig& c) { c.no_gan = true; }},
      {"no_gan+no_lambda", [](TrainConfig& c) { c.no_gan = c.no_lambda = true; }},
  };
  const std::vector<Setting> settings = {Setting::imputation(config.eval.rate), Setting::prediction(config.eval.obs_len)};
  const bool split = use_split(data, config);

  std::string table = "variant," + settings[0].label() + "," + settings[1].label() + "\n";
  std::vector<EvalReport> all;
  for (const auto& v : variants) {
    RunConfig vc = config;
    v.apply(vc.train);
    const ImputerSpec spec{v.name, [c = vc.train, n = v.name] { return ImputerPtr(new BiganImputer(c, n)); }};
    auto reports = run_protocol(data, std::span<const ImputerSpec>(&spec, 1), settings, vc,
                                [&](std::size_t fold, const Imputer& imp) {
                                  const auto& ckpt = dynamic_cast<const BiganImputer&>(imp).checkpoint();
                                  const std::string file = split ? v.name + ".bgan"
                                                                 : v.name + "_fold" + std::to_string(fold) + ".bgan";
                                  save_checkpoint(*ckpt, dir / file);
                                });
    table += v.name + "," + cell(reports[0]) + "," + cell(reports[1]) + "\n";
    std::cerr << v.name << ": " << cell(reports[0]) << " | " << cell(reports[1]) << "\n";
    for (auto& r : reports) all.push_back(std::move(r));
  }
  write_reports(all, dir);
  write_file(dir / "table3.csv", table);
  echo_config(dir, config);
  std::cout << table;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bi-GAN time-series imputation and prediction"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "convert a raw CSV into a dataset file");
  c_ingest->add_option("--input", ingest.input, "raw CSV")->required();
  c_ingest->add_option("--format", ingest.format, "air-quality | long-csv")->capture_default_str();
  c_ingest->add_option("--out", ingest.out, "dataset file to write")->required();
  c_ingest->add_option("--target", ingest.target, "target column (air-quality default CO(GT); long-csv default first feature)");
  c_ingest->add_option("--window", ingest.window, "air-quality window length")->capture_default_str();
  c_ingest->add_flag("--raw", ingest.raw, "keep original units (no z-scoring)");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "write a synthetic dataset");
  c_synth->add_option("--kind", synth.kind, "sinusoid | ar1 | stationary")->capture_default_str();
  c_synth->add_option("--out", synth.out, "output path")->required();
  c_synth->add_option("--format", synth.format, "dataset | long-csv")->capture_default_str();
  c_synth->add_option("--samples", synth.options.samples, "number of samples")->capture_default_str();
  c_synth->add_option("--steps", synth.options.steps, "steps per sample")->capture_default_str();
  c_synth->add_option("--features", synth.options.features, "features per step")->capture_default_str();
  c_synth->add_option("--train", synth.options.train, "train samples")->capture_default_str();
  c_synth->add_option("--validation", synth.options.validation, "validation samples")->capture_default_str();
  c_synth->add_option("--target-missing", synth.options.target_missing, "MCAR rate on the target")->capture_default_str();
  c_synth->add_option("--min-length", synth.options.min_length, "shortest native length (0 = fixed)")->capture_default_str();
  c_synth->add_option("--seed", synth.options.seed, "generator seed")->capture_default_str();

  auto* c_config = app.add_subcommand("config", "print a configuration file holding every default");

  TrainArgs train_args;
  auto* c_train = app.add_subcommand("train", "train a model");
  c_train->add_option("--data", train_args.data, "dataset file")->required();
  c_train->add_option("--out", train_args.out, "checkpoint to write")->required();
  c_train->add_option("--log", train_args.log, "epoch log (default <out>.log.csv)");
  train_args.config.attach(c_train);

  ApplyArgs impute_args, predict_args;
  auto* c_impute = app.add_subcommand("impute", "delete random target cells and fill them");
  auto* c_predict = app.add_subcommand("predict", "delete the target after an observation window and fill it");
  for (auto [cmd, args] : {std::pair{c_impute, &impute_args}, std::pair{c_predict, &predict_args}}) {
    cmd->add_option("--checkpoint", args->checkpoint, "trained checkpoint")->required();
    cmd->add_option("--data", args->data, "dataset file")->required();
    cmd->add_option("--seed", args->seed, "deletion seed")->capture_default_str();
    cmd->add_option("--out", args->out, "per-cell CSV to write")->required();
    cmd->add_option("--samples", args->which, "auto | all | train | validation | test")->capture_default_str();
  }
  c_impute->add_option("--rate", impute_args.rate, "deletion rate (0 = none)")->capture_default_str();
  c_predict->add_option("--obs-len", predict_args.obs_len, "observation window length")->capture_default_str();

  BenchArgs bench;
  auto* c_bench = app.add_subcommand("benchmark", "compare imputers");
  c_bench->add_option("--data", bench.data, "dataset file")->required();
  c_bench->add_option("--imputers", bench.imputers, "comma list (default: eval.imputers)");
  c_bench->add_option("--sweep", bench.sweep, "none | missing | windows")->capture_default_str();
  c_bench->add_option("--out", bench.out, "output directory")->required();
  bench.config.attach(c_bench);

  AblateArgs ablate;
  auto* c_ablate = app.add_subcommand("ablate", "train and score the five model variants");
  c_ablate->add_option("--data", ablate.data, "dataset file")->required();
  c_ablate->add_option("--out", ablate.out, "output directory")->required();
  ablate.config.attach(c_ablate);

  std::string key_help = "configuration keys (section.key = default):\n";
  for (const auto& k : config_keys()) {
    key_help += "  " + k.qualified() + " = " + k.get(RunConfig{}) + "  " + k.help + "  [env " + k.env_name() + "]\n";
  }
  app.footer(key_help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*c_ingest) cmd_ingest(ingest);
    if (*c_synth) cmd_synth(synth);
    if (*c_config) {
      for (const auto& k : config_keys()) std::cout << "# " << k.qualified() << ": " << k.help << "\n";
      std::cout << "\n" << default_config_text();
    }
    if (*c_train) cmd_train(train_args);
    if (*c_impute) cmd_apply(impute_args, false);
    if (*c_predict) cmd_apply(predict_args, true);
    if (*c_bench) cmd_benchmark(bench);
    if (*c_ablate) cmd_ablate(ablate);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
