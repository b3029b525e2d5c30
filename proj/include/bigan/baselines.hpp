// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "bigan/imputer.hpp"

namespace bigan {

/// Fills with the mean of the observed train-split target cells.
class MeanImputer final : public Imputer {
 public:
  std::string name() const override { return "mean"; }
  void fit(const Dataset& data) override;
  std::vector<std::vector<double>> impute(std::span<const SeriesSample> samples) const override;
  double mean() const;

 private:
  std::optional<double> mean_;
};

/// Missing-aware k-nearest-neighbour imputer. The distance between a query
/// and a train sample is sqrt(sum of squared differences / overlap) over the
/// (step, feature) cells observed in both. A missing target cell at step i is
/// filled with the average of the k nearest train samples observing (i,
/// target); ties are broken by train order. Samples without any overlap are
/// never neighbours. With no candidate the cell falls back to the mean.
class KnnImputer final : public Imputer {
 public:
  explicit KnnImputer(std::size_t k = 5);
  std::string name() const override { return "knn"; }
  void fit(const Dataset& data) override;
  std::vector<std::vector<double>> impute(std::span<const SeriesSample> samples) const override;

  static double distance(const SeriesSample& a, const SeriesSample& b);

 private:
  std::size_t k_;
  std::vector<SeriesSample> train_;
  MeanImputer fallback_;
};

/// Chained-equations imputer on the flattened (step x feature) table of the
/// train rows together with the query rows. Missing cells start at column
/// means; each iteration regresses every incomplete column on all other
/// columns (least squares with intercept) over its observed rows and
/// overwrites its missing cells with the predictions. Rank-deficient systems
/// are solved with a ridge penalty of 1e-6 and reported as a warning.
class MiceImputer final : public Imputer {
 public:
  explicit MiceImputer(std::size_t iterations = 10);
  std::string name() const override { return "mice"; }
  void fit(const Dataset& data) override;
  std::vector<std::vector<double>> impute(std::span<const SeriesSample> samples) const override;

  static constexpr double kRidge = 1e-6;

  /// One run over an explicit table: `values` and `observed` are rows x cols.
  /// Returns the completed table.
  static Array complete_table(const Array& values, const Array& observed, std::size_t iterations,
                              std::size_t* ridge_fallbacks = nullptr);

 private:
  std::size_t iterations_;
  std::vector<SeriesSample> train_;
};

/// Linear interpolation of the target along time between the sample's own
/// observations; constant extrapolation past the ends, mean fill when the
/// target is never observed.
class InterpolationImputer final : public Imputer {
 public:
  std::string name() const override { return "interp"; }
  void fit(const Dataset& data) override;
  std::vector<std::vector<double>> impute(std::span<const SeriesSample> samples) const override;

 private:
  MeanImputer fallback_;
};

}  // namespace bigan
