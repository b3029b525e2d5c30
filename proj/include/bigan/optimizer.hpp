// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "bigan/tape.hpp"

namespace bigan {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive-moment optimiser with bias correction. Moment buffers are keyed by
/// parameter name and created on first use.
class Adam {
 public:
  explicit Adam(AdamConfig config) : config_(config) {}

  /// Applies one update to every parameter accepted by `include` (all when
  /// empty). Throws DivergenceError if any updated value is not finite.
  void step(ParamMap& params, const ParamMap& grads,
            const std::function<bool(const std::string&)>& include = {});

  std::uint64_t steps() const noexcept { return steps_; }
  const AdamConfig& config() const noexcept { return config_; }

 private:
  AdamConfig config_;
  std::uint64_t steps_ = 0;
  ParamMap first_;
  ParamMap second_;
};

}  // namespace bigan
