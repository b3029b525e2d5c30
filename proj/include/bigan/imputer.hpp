// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bigan/dataset.hpp"

namespace bigan {

/// Common interface of every method scored by the evaluation harness.
/// `fit` sees the whole dataset and must only learn from its train split
/// (and validation split, where the method uses one). `impute` returns, for
/// each sample, the completed target series in the sample's units: observed
/// target cells are returned unchanged, every mask-0 target cell is filled.
class Imputer {
 public:
  virtual ~Imputer() = default;
  virtual std::string name() const = 0;
  virtual void fit(const Dataset& data) = 0;
  virtual std::vector<std::vector<double>> impute(std::span<const SeriesSample> samples) const = 0;

  /// Non-fatal conditions met while fitting or imputing.
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

 protected:
  void warn(std::string message) const;

 private:
  mutable std::vector<std::string> warnings_;
};

using ImputerPtr = std::unique_ptr<Imputer>;

}  // namespace bigan
