// SPDX-License-Identifier: Apache-2.0
#include "bigan/evaluation.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

#include "bigan/errors.hpp"
#include "bigan/rng.hpp"

namespace bigan {

std::string format_number(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

double mae(std::span<const double> truth, std::span<const double> predicted, std::span<const double> eval_mask) {
  if (truth.size() != predicted.size() || truth.size() != eval_mask.size()) {
    throw std::invalid_argument("mae: length mismatch");
  }
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (eval_mask[i] == 1.0) {
      total += std::fabs(truth[i] - predicted[i]);
      ++count;
    }
  if (count == 0) throw std::invalid_argument("mae: empty evaluation mask");
  return total / static_cast<double>(count);
}

double t_quantile_975(std::size_t df) {
  if (df == 0) throw std::invalid_argument("t quantile needs at least one degree of freedom");
  const boost::math::students_t dist(static_cast<double>(df));
  return boost::math::quantile(dist, 0.975);
}

std::pair<double, double> mean_and_ci(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean_and_ci: no values");
  const double k = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= k;
  if (values.size() < 2) return {mean, std::numeric_limits<double>::quiet_NaN()};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double s = std::sqrt(ss / (k - 1.0));
  return {mean, t_quantile_975(values.size() - 1) * s / std::sqrt(k)};
}

// Reports ----------------------------------------------------------------------------

namespace {

std::string setting_kind(const Setting& s) { return s.kind == SettingKind::imputation ? "imputation" : "prediction"; }

std::string setting_parameter(const Setting& s) {
  return s.kind == SettingKind::imputation ? format_number(s.rate) : std::to_string(s.observation_length);
}

}  // namespace

std::string EvalReport::csv() const {
  const std::string prefix = imputer + "," + setting_kind(setting) + "," + setting_parameter(setting) + ",";
  const std::string suffix = "," + std::to_string(seed) + "," + std::to_string(config_hash) + "\n";
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& f : folds) {
    out += prefix + std::to_string(f.fold) + "," + f.group + "," + (f.skipped ? "NA" : format_number(f.mae)) + "," +
           std::to_string(f.cells) + "," + suffix;
  }
  out += prefix + "all,," + format_number(mean_mae) + "," + std::to_string(cells) + "," + format_number(ci_half_width) +
         suffix;
  return out;
}

std::string EvalReport::text() const {
  std::string out;
  out += "imputer: " + imputer + "\n";
  out += "setting: " + setting.label() + "\n";
  out += "protocol: " + protocol + "\n";
  out += "seed: " + std::to_string(seed) + "\n";
  out += "config_hash: " + std::to_string(config_hash) + "\n";
  out += "mean_mae: " + format_number(mean_mae) + "\n";
  out += "ci95_half_width: " + format_number(ci_half_width) + "\n";
  out += "evaluated_cells: " + std::to_string(cells) + "\n";
  for (const auto& f : folds) {
    out += "fold " + std::to_string(f.fold) + (f.group.empty() ? "" : " (" + f.group + ")") + ": ";
    out += f.skipped ? std::string("skipped, no evaluated cells") : "mae " + format_number(f.mae) + ", cells " +
                                                                          std::to_string(f.cells) + ", samples " +
                                                                          std::to_string(f.samples);
    out += "\n";
  }
  for (const auto& n : notes) out += "note: " + n + "\n";
  return out;
}

std::string EvalReport::file_stem() const { return setting.label() + "_" + imputer + "_seed" + std::to_string(seed); }

std::string summary_csv(std::span<const EvalReport> reports) {
  std::string out = "imputer,setting,parameter,protocol,mean_mae,ci_half_width,folds,cells,seed,config_hash\n";
  for (const auto& r : reports) {
    std::size_t live = 0;
    for (const auto& f : r.folds) live += !f.skipped;
    out += r.imputer + "," + setting_kind(r.setting) + "," + setting_parameter(r.setting) + "," + r.protocol + "," +
           format_number(r.mean_mae) + "," + format_number(r.ci_half_width) + "," + std::to_string(live) + "," +
           std::to_string(r.cells) + "," + std::to_string(r.seed) + "," + std::to_string(r.config_hash) + "\n";
  }
  return out;
}

void write_reports(std::span<const EvalReport> reports, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& r : reports) {
    for (const auto& [ext, body] : {std::pair{".csv", r.csv()}, std::pair{".txt", r.text()}}) {
      const auto path = dir / (r.file_stem() + ext);
      std::ofstream out(path, std::ios::binary);
      if (!out) throw DataError("cannot write '" + path.string() + "'");
      out << body;
    }
  }
}

// Bi-GAN adapter ----------------------------------------------------------------------

BiganImputer::BiganImputer(TrainConfig config, std::string label) : config_(config), label_(std::move(label)) {}

BiganImputer::BiganImputer(Checkpoint checkpoint, std::string label)
    : label_(std::move(label)), checkpoint_(std::move(checkpoint)), pretrained_(true) {}

void BiganImputer::fit(const Dataset& data) {
  if (pretrained_) return;
  TrainResult result = train(data, config_);
  checkpoint_ = std::move(result.checkpoint);
  log_ = std::move(result.log);
}

std::vector<std::vector<double>> BiganImputer::impute(std::span<const SeriesSample> samples) const {
  if (!checkpoint_) throw std::logic_error("bigan imputer used before fit");
  return impute_with_generator(checkpoint_->generator, samples, checkpoint_->generator_config);
}

// Scoring ------------------------------------------------------------------------------

CorruptedSet corrupt_samples(const Dataset& data, std::span<const std::size_t> which, const Setting& setting,
                             std::uint64_t seed) {
  CorruptedSet set;
  for (std::size_t k : which) {
    const SeriesSample& s = data.samples.at(k);
    if (s.observed_target_count() == 0) {
      ++set.excluded;
      continue;
    }
    CorruptionPlan plan;
    try {
      plan = corrupt(s, setting, mix_seed(seed, k));
    } catch (const std::invalid_argument&) {
      ++set.excluded;
      continue;
    }
    if (plan.eval_count() == 0) {
      ++set.excluded;
      continue;
    }
    set.indices.push_back(k);
    set.plans.push_back(std::move(plan));
  }
  return set;
}

FoldResult score(const Dataset& data, const Imputer& imputer, const CorruptedSet& set) {
  FoldResult result;
  if (set.plans.empty()) {
    result.skipped = true;
    return result;
  }
  std::vector<SeriesSample> inputs;
  inputs.reserve(set.plans.size());
  for (const auto& p : set.plans) inputs.push_back(p.corrupted);
  const auto filled = imputer.impute(inputs);
  if (filled.size() != inputs.size()) throw std::logic_error(imputer.name() + ": wrong number of imputed samples");
  double total = 0.0;
  for (std::size_t k = 0; k < set.plans.size(); ++k) {
    const CorruptionPlan& p = set.plans[k];
    for (std::size_t i = 0; i < p.eval_mask.size(); ++i) {
      if (p.eval_mask[i] != 1.0) continue;
      total += std::fabs(data.denormalize_target(p.truth[i]) - data.denormalize_target(filled[k][i]));
      ++result.cells;
    }
    ++result.samples;
  }
  result.mae = total / static_cast<double>(result.cells);
  return result;
}

// Drivers ------------------------------------------------------------------------------

std::vector<std::vector<std::size_t>> make_folds(std::size_t samples, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k-fold needs k >= 2");
  if (samples < k) throw DataError("k-fold: fewer samples (" + std::to_string(samples) + ") than folds");
  std::vector<std::size_t> order(samples);
  for (std::size_t i = 0; i < samples; ++i) order[i] = i;
  Rng rng(mix_seed(seed, 0x666f6c64));
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t f = 0, start = 0; f < k; ++f) {
    const std::size_t size = samples / k + (f < samples % k ? 1 : 0);
    folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                    order.begin() + static_cast<std::ptrdiff_t>(start + size));
    std::sort(folds[f].begin(), folds[f].end());
    start += size;
  }
  return folds;
}

Dataset relabel_fold(const Dataset& data, std::span<const std::size_t> test) {
  Dataset out = denormalize(data);
  std::fill(out.splits.begin(), out.splits.end(), Split::train);
  for (std::size_t k : test) out.splits.at(k) = Split::test;
  return normalize(std::move(out));
}

namespace {

EvalReport finish(std::string imputer, const Setting& setting, std::string protocol, std::vector<FoldResult> folds,
                  const ExperimentOptions& options, std::vector<std::string> notes, bool require_two) {
  EvalReport r;
  r.imputer = std::move(imputer);
  r.setting = setting;
  r.protocol = std::move(protocol);
  r.seed = options.seed;
  r.config_hash = options.config_hash;
  r.notes = std::move(notes);
  std::vector<double> values;
  for (const auto& f : folds) {
    if (f.skipped) {
      r.notes.push_back("fold " + std::to_string(f.fold) + " skipped: no evaluated cells");
      continue;
    }
    values.push_back(f.mae);
    r.cells += f.cells;
  }
  r.folds = std::move(folds);
  if (values.empty() || (require_two && values.size() < 2)) {
    throw DataError("evaluation of " + r.imputer + " on " + setting.label() + ": fewer than 2 folds have evaluated cells");
  }
  std::tie(r.mean_mae, r.ci_half_width) = mean_and_ci(values);
  return r;
}

struct Accumulator {
  std::vector<FoldResult> folds;
  std::vector<std::string> notes;
  void note(const std::string& n) {
    if (std::find(notes.begin(), notes.end(), n) == notes.end()) notes.push_back(n);
  }
};

}  // namespace

std::vector<EvalReport> run_kfold(const Dataset& data, std::span<const ImputerSpec> imputers,
                                  std::span<const Setting> settings, const ExperimentOptions& options) {
  const auto folds = make_folds(data.size(), options.folds, options.seed);
  std::vector<Accumulator> acc(imputers.size() * settings.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const Dataset fold_data = relabel_fold(data, folds[f]);
    std::vector<CorruptedSet> sets;
    for (const auto& s : settings) sets.push_back(corrupt_samples(fold_data, folds[f], s, options.seed));
    for (std::size_t m = 0; m < imputers.size(); ++m) {
      ImputerPtr imputer = imputers[m].make();
      imputer->fit(fold_data);
      if (options.on_fit) options.on_fit(f, *imputer);
      for (std::size_t s = 0; s < settings.size(); ++s) {
        Accumulator& a = acc[m * settings.size() + s];
        FoldResult r = score(fold_data, *imputer, sets[s]);
        r.fold = f;
        a.folds.push_back(r);
        if (sets[s].excluded)
          a.note("fold " + std::to_string(f) + ": " + std::to_string(sets[s].excluded) +
                 " samples had nothing to evaluate");
        for (const auto& w : imputer->warnings()) a.note(w);
      }
    }
  }
  std::vector<EvalReport> reports;
  for (std::size_t m = 0; m < imputers.size(); ++m)
    for (std::size_t s = 0; s < settings.size(); ++s) {
      Accumulator& a = acc[m * settings.size() + s];
      reports.push_back(finish(imputers[m].name, settings[s], "kfold-" + std::to_string(options.folds),
                               std::move(a.folds), options, std::move(a.notes), true));
    }
  return reports;
}

EvalReport run_kfold(const Dataset& data, const ImputerSpec& imputer, const Setting& setting, std::size_t k,
                     std::uint64_t seed) {
  ExperimentOptions options;
  options.folds = k;
  options.seed = seed;
  return run_kfold(data, std::span<const ImputerSpec>(&imputer, 1), std::span<const Setting>(&setting, 1), options)
      .front();
}

std::vector<EvalReport> run_split(const Dataset& data, std::span<const ImputerSpec> imputers,
                                  std::span<const Setting> settings, const ExperimentOptions& options) {
  const auto test = data.indices(Split::test);
  if (test.empty()) throw DataError("split evaluation: dataset has no test-split samples");
  std::map<std::string, std::vector<std::size_t>> by_group;
  for (std::size_t k : test) by_group[data.groups.size() == data.size() ? data.groups[k] : std::string()].push_back(k);

  std::vector<std::vector<CorruptedSet>> sets(by_group.size());
  {
    std::size_t g = 0;
    for (const auto& [name, members] : by_group) {
      for (const auto& s : settings) sets[g].push_back(corrupt_samples(data, members, s, options.seed));
      ++g;
    }
  }
  std::vector<EvalReport> reports;
  for (const auto& spec : imputers) {
    ImputerPtr imputer = spec.make();
    imputer->fit(data);
    if (options.on_fit) options.on_fit(0, *imputer);
    for (std::size_t s = 0; s < settings.size(); ++s) {
      Accumulator a;
      std::size_t g = 0;
      for (const auto& [name, members] : by_group) {
        FoldResult r = score(data, *imputer, sets[g][s]);
        r.fold = g;
        r.group = name;
        a.folds.push_back(r);
        if (sets[g][s].excluded)
          a.note((name.empty() ? std::string("test") : name) + ": " + std::to_string(sets[g][s].excluded) +
                 " samples had nothing to evaluate");
        ++g;
      }
      for (const auto& w : imputer->warnings()) a.note(w);
      reports.push_back(finish(spec.name, settings[s], "split", std::move(a.folds), options, std::move(a.notes), false));
    }
  }
  return reports;
}

std::vector<Setting> missing_rate_settings(std::span<const double> rates) {
  std::vector<Setting> out;
  for (double r : rates) out.push_back(Setting::imputation(r));
  return out;
}

std::vector<Setting> window_settings(std::span<const std::size_t> lengths) {
  std::vector<Setting> out;
  for (std::size_t l : lengths) out.push_back(Setting::prediction(l));
  return out;
}

}  // namespace bigan
