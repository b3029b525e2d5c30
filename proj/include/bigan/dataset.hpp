// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bigan/array.hpp"

namespace bigan {

/// Strictly increasing time points of one series (dataset-native units).
class TimeGrid {
 public:
  TimeGrid() = default;
  explicit TimeGrid(std::vector<double> times);

  std::size_t size() const noexcept { return times_.size(); }
  double operator[](std::size_t i) const { return times_[i]; }
  const std::vector<double>& times() const noexcept { return times_; }

  /// Grid traversed backwards, expressed as increasing "elapsed" times so the
  /// forward recurrence can be reused verbatim: t'_k = t_{n-1} - t_{n-1-k}.
  TimeGrid reversed() const;

 private:
  std::vector<double> times_;
};

/// One aligned multivariate series. Missing cells hold 0 in `values`.
struct SeriesSample {
  std::string id;
  Array values;     // n x d
  Array mask;       // n x d, 1 = observed
  Array delta_fwd;  // n x d
  Array delta_bwd;  // n x d
  TimeGrid grid;
  std::size_t target = 0;
  std::size_t native_length = 0;  // rows before tail padding

  std::size_t steps() const { return values.rows(); }
  std::size_t features() const { return values.cols(); }

  std::vector<double> target_values() const;
  std::vector<double> target_mask() const;
  std::size_t observed_target_count() const;

  /// Recomputes both delta matrices from the current mask and grid.
  void refresh_deltas();
};

/// Builds a sample from raw rows. `observed` marks present cells; values at
/// unobserved cells are discarded.
SeriesSample make_sample(std::string id, const Array& values, const Array& observed, TimeGrid grid,
                         std::size_t target);

/// Per-feature z-score parameters fitted on observed train-split cells.
struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;

  bool empty() const noexcept { return mean.empty(); }
  double normalize(std::size_t feature, double v) const { return (v - mean[feature]) / stddev[feature]; }
  double denormalize(std::size_t feature, double z) const { return z * stddev[feature] + mean[feature]; }
};

enum class Split : std::uint8_t { train = 0, validation = 1, test = 2 };

std::string_view split_name(Split s);
Split parse_split(std::string_view name);

struct Dataset {
  std::vector<SeriesSample> samples;
  std::vector<Split> splits;
  std::vector<std::string> groups;  // e.g. "2004-07" for the air-quality months
  std::vector<std::string> feature_names;
  std::size_t target = 0;
  NormStats norm;
  bool normalized = false;
  std::vector<std::string> dropped_features;
  std::vector<std::string> notes;

  std::size_t size() const noexcept { return samples.size(); }
  std::size_t steps() const { return samples.empty() ? 0 : samples.front().steps(); }
  std::size_t features() const { return feature_names.size(); }

  std::vector<std::size_t> indices(Split s) const;
  bool has_split(Split s) const;
  Dataset subset(std::span<const std::size_t> which) const;

  /// Maps a normalised target value back to original units (identity when
  /// the dataset is not normalised).
  double denormalize_target(double z) const;
  double normalize_target(double v) const;

  /// Throws std::invalid_argument if the shared-shape or split invariants fail.
  void validate() const;
};

/// Time since the last observation, scanning forward. Row 0 is zero; a gap
/// accumulates across consecutive missing predecessors.
Array compute_delta_forward(const Array& mask, const TimeGrid& grid);
/// (delta_fwd, delta_bwd); the backward matrix is the forward recurrence on
/// the time-reversed mask and grid, re-reversed.
std::pair<Array, Array> compute_deltas(const Array& mask, const TimeGrid& grid);

/// Reverses the row order of an n x d matrix.
Array reverse_rows(const Array& m);

/// Tail-pads every sample to `length` rows with mask 0, extending the grid by
/// the sample's last step. All samples are labelled train.
Dataset pad_and_align(std::vector<SeriesSample> raw, std::size_t length);

/// Fits NormStats on observed train-split cells, z-scores observed cells and
/// drops features with zero (or undefined) train variance.
Dataset normalize(Dataset raw);
/// Inverse of normalize on observed cells; dropped features stay dropped.
Dataset denormalize(Dataset data);

/// Fraction of missing cells over non-padded rows; all features when
/// `feature` is empty.
double missing_fraction(const Dataset& data, std::optional<std::size_t> feature = std::nullopt);

// Ingestion -----------------------------------------------------------------

struct AirQualityOptions {
  std::size_t window = 20;
  std::string target = "CO(GT)";
  std::vector<std::string> test_months = {"2004-07", "2004-10", "2005-02"};
  std::vector<std::string> validation_months = {"2004-05"};
  bool normalize = true;
};

/// UCI AirQualityUCI.csv: ';' separated, decimal commas, Date (dd/mm/yyyy)
/// and Time (HH.MM.SS) columns followed by 13 measurements, -200 = missing.
Dataset load_air_quality_csv(const std::filesystem::path& path, const AirQualityOptions& options = {});
Dataset parse_air_quality(std::istream& in, const AirQualityOptions& options = {});

struct LongCsvOptions {
  std::optional<std::string> target;     // default: first feature seen
  std::optional<std::size_t> length;     // default: longest sample
  bool normalize = true;
};

/// Long format: header `sample_id,time,feature,value[,split]`; one row per
/// observed cell, absent rows are missing.
Dataset load_long_csv(const std::filesystem::path& path, const LongCsvOptions& options = {});
Dataset parse_long_csv(std::istream& in, const LongCsvOptions& options = {});

// Binary container ------------------------------------------------------------

void save_dataset(const Dataset& data, const std::filesystem::path& path);
void write_dataset(const Dataset& data, std::ostream& out);
Dataset load_dataset(const std::filesystem::path& path);
Dataset read_dataset(std::istream& in);

}  // namespace bigan
