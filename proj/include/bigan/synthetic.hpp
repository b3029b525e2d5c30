// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bigan/dataset.hpp"

namespace bigan {

/// Shared shape and labelling options of the synthetic generators. Samples
/// are labelled train / validation / test in index order.
struct SyntheticOptions {
  std::size_t samples = 500;
  std::size_t steps = 20;
  std::size_t features = 4;
  std::size_t train = 350;
  std::size_t validation = 50;
  double target_missing = 0.2;     // MCAR rate on the target
  double covariate_missing = 0.0;  // MCAR rate on every other feature
  double noise = 0.1;
  /// When below `steps`, native lengths are drawn uniformly from
  /// [min_length, steps] and samples are tail padded.
  std::size_t min_length = 0;
  bool normalize = true;
  std::uint64_t seed = 1;
};

/// Coupled sinusoids: each sample draws a frequency, phase and amplitude;
/// feature j is A sin(w t + phi + j pi/4) plus Gaussian noise. Target = 0.
Dataset make_sinusoid_dataset(const SyntheticOptions& options);

/// Target follows a unit-variance AR(1) with coefficient `phi`; covariate j
/// is coupling * target + sqrt(1 - coupling^2) * independent AR(1), plus noise.
Dataset make_ar1_dataset(const SyntheticOptions& options, double phi = 0.9, double coupling = 0.5);

/// Independent N(5, 2^2) draws in every cell.
Dataset make_stationary_dataset(const SyntheticOptions& options);

/// Long-format CSV (sample_id,time,feature,value,split) of the observed cells
/// in original units.
void write_long_csv(const Dataset& data, std::ostream& out);

/// A file in the UCI air-quality layout covering `months` ("yyyy-mm") of
/// hourly rows, with -200 in about `missing` of the measurement cells.
void write_air_quality_like_csv(std::ostream& out, const std::vector<std::string>& months, double missing,
                                std::uint64_t seed);

}  // namespace bigan
