// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bigan/corruption.hpp"
#include "bigan/imputer.hpp"
#include "bigan/trainer.hpp"

namespace bigan {

/// Mean of |truth - predicted| over eval_mask = 1. Throws
/// std::invalid_argument when the mask selects nothing.
double mae(std::span<const double> truth, std::span<const double> predicted, std::span<const double> eval_mask);

/// Two-sided 95% Student-t quantile t_{0.975, df}.
double t_quantile_975(std::size_t df);

/// (mean, t_{0.975,k-1} s / sqrt(k)) of per-fold values; the half-width is
/// NaN for a single value.
std::pair<double, double> mean_and_ci(std::span<const double> values);

struct FoldResult {
  std::size_t fold = 0;
  std::string group;       // month label for split-based runs, else empty
  double mae = 0.0;        // original units
  std::size_t cells = 0;   // evaluated cells
  std::size_t samples = 0; // samples with at least one evaluated cell
  bool skipped = false;    // no evaluated cell in this fold
};

struct EvalReport {
  std::string imputer;
  Setting setting;
  std::string protocol;  // "kfold-5" or "split"
  std::vector<FoldResult> folds;
  double mean_mae = 0.0;
  double ci_half_width = 0.0;  // NaN when fewer than two folds survive
  std::size_t cells = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::vector<std::string> notes;

  static constexpr const char* kCsvHeader = "imputer,setting,parameter,fold,group,mae,cells,ci_half_width,seed,config_hash";
  /// Header, one row per fold, and an aggregate row with fold = "all".
  std::string csv() const;
  /// "key: value" lines mirroring the CSV fields.
  std::string text() const;
  /// <setting>_<imputer>_seed<seed>
  std::string file_stem() const;
};

/// Builds a fresh, unfitted imputer.
using ImputerFactory = std::function<ImputerPtr()>;

struct ImputerSpec {
  std::string name;
  ImputerFactory make;
};

/// Bi-GAN behind the Imputer interface. `fit` runs train() on the dataset,
/// except when the imputer was built from a checkpoint, which is kept as is.
class BiganImputer final : public Imputer {
 public:
  explicit BiganImputer(TrainConfig config, std::string label = "bigan");
  explicit BiganImputer(Checkpoint checkpoint, std::string label = "bigan");

  std::string name() const override { return label_; }
  void fit(const Dataset& data) override;
  std::vector<std::vector<double>> impute(std::span<const SeriesSample> samples) const override;

  const std::optional<Checkpoint>& checkpoint() const noexcept { return checkpoint_; }
  const std::vector<EpochLog>& log() const noexcept { return log_; }

 private:
  TrainConfig config_;
  std::string label_;
  std::optional<Checkpoint> checkpoint_;
  bool pretrained_ = false;
  std::vector<EpochLog> log_;
};

/// The corrupted copies of a set of samples under one setting. Samples whose
/// plan cannot be built (no observed target, or nothing to delete) are
/// excluded from scoring and counted.
struct CorruptedSet {
  std::vector<std::size_t> indices;  // dataset indices of the scored samples
  std::vector<CorruptionPlan> plans;
  std::size_t excluded = 0;
};

/// Per-sample seed: mix_seed(seed, dataset index). Plans depend only on the
/// sample, the setting and this seed, so imputers see identical deletions.
CorruptedSet corrupt_samples(const Dataset& data, std::span<const std::size_t> which, const Setting& setting,
                             std::uint64_t seed);

/// MAE (original units) of `imputer` on a corrupted set.
FoldResult score(const Dataset& data, const Imputer& imputer, const CorruptedSet& set);

/// Seeded partition of sample indices into k folds of near-equal size.
std::vector<std::vector<std::size_t>> make_folds(std::size_t samples, std::size_t k, std::uint64_t seed);

/// Copy of `data` with `test` labelled test and every other sample train,
/// re-normalised on the new train split.
Dataset relabel_fold(const Dataset& data, std::span<const std::size_t> test);

struct ExperimentOptions {
  std::size_t folds = 5;
  std::uint64_t seed = 42;
  std::uint64_t config_hash = 0;
  /// Called after each imputer is fitted (fold index, imputer).
  std::function<void(std::size_t, const Imputer&)> on_fit;
};

/// k-fold driver: each imputer is fitted once per fold and scored on every
/// setting. Returns one report per (imputer, setting), imputer-major.
std::vector<EvalReport> run_kfold(const Dataset& data, std::span<const ImputerSpec> imputers,
                                  std::span<const Setting> settings, const ExperimentOptions& options);

/// Single-imputer, single-setting convenience form.
EvalReport run_kfold(const Dataset& data, const ImputerSpec& imputer, const Setting& setting, std::size_t k,
                     std::uint64_t seed);

/// Split driver: each imputer is fitted once on the dataset's own
/// train/validation splits; test samples are scored with one fold per test
/// group (month), or a single fold when no groups are recorded.
std::vector<EvalReport> run_split(const Dataset& data, std::span<const ImputerSpec> imputers,
                                  std::span<const Setting> settings, const ExperimentOptions& options);

inline const std::vector<double> kSweepRates = {0.1, 0.2, 0.3, 0.4, 0.5};
inline const std::vector<std::size_t> kSweepObservationLengths = {4, 6, 8, 10};

std::vector<Setting> missing_rate_settings(std::span<const double> rates = kSweepRates);
std::vector<Setting> window_settings(std::span<const std::size_t> lengths = kSweepObservationLengths);

/// Tidy table: one aggregate row per report.
std::string summary_csv(std::span<const EvalReport> reports);

/// Writes <stem>.csv and <stem>.txt for each report into `dir`.
void write_reports(std::span<const EvalReport> reports, const std::filesystem::path& dir);

/// Shortest round-trip decimal form ("NA" for NaN).
std::string format_number(double v);

}  // namespace bigan
