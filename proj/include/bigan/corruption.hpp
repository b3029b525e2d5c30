// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bigan/dataset.hpp"

namespace bigan {

enum class SettingKind { imputation, prediction };

/// Test-time deletion protocol: random deletion at `rate`, or deletion of
/// everything from `observation_length` onwards.
struct Setting {
  SettingKind kind = SettingKind::imputation;
  double rate = 0.1;
  std::size_t observation_length = 4;

  static Setting imputation(double rate) { return {SettingKind::imputation, rate, 0}; }
  static Setting prediction(std::size_t obs) { return {SettingKind::prediction, 0.0, obs}; }

  /// "imputation-0.1" / "prediction-4"
  std::string label() const;
};

/// Artificial deletions on the target feature of one sample.
struct CorruptionPlan {
  Setting setting;
  std::uint64_t seed = 0;
  std::vector<double> eval_mask;  // n, 1 = deleted and scored
  std::vector<double> truth;      // pre-corruption target values (sample units)
  SeriesSample corrupted;
  bool empty_window = false;      // prediction: nothing observed to delete

  std::size_t eval_count() const;
};

/// Deletes round-half-up(rate * observed) uniformly chosen observed target
/// cells. Throws std::invalid_argument when rate is outside (0,1), the target
/// has no observations, or every observation would be deleted.
CorruptionPlan corrupt_imputation(const SeriesSample& sample, double rate, std::uint64_t seed);

/// Deletes every observed target cell at step >= observation_length.
CorruptionPlan corrupt_prediction(const SeriesSample& sample, std::size_t observation_length);

CorruptionPlan corrupt(const SeriesSample& sample, const Setting& setting, std::uint64_t seed);

/// Applies an explicit list of deleted target steps (replay path).
CorruptionPlan corrupt_steps(const SeriesSample& sample, const Setting& setting, std::uint64_t seed,
                             const std::vector<std::size_t>& steps);

/// One line per plan, tab separated:
///   sample_id  setting  parameter  seed  step:feature[,step:feature...]
/// ('-' for an empty deletion list). Lines starting with '#' are comments.
void write_plans(std::ostream& out, const std::vector<CorruptionPlan>& plans);

struct PlanRecord {
  std::string sample_id;
  Setting setting;
  std::uint64_t seed = 0;
  std::vector<std::size_t> steps;
  std::size_t feature = 0;
};
std::vector<PlanRecord> read_plans(std::istream& in);

}  // namespace bigan
