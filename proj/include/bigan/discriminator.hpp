// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "bigan/generator.hpp"
#include "bigan/recurrent.hpp"

namespace bigan {

enum class LossMode { vanilla, wasserstein };

LossMode parse_loss_mode(const std::string& name);
std::string loss_mode_name(LossMode mode);

struct DiscriminatorConfig {
  std::size_t hidden = 32;
  CellKind cell = CellKind::simple;
  bool conditioning = false;  // also feed target mask and target deltas
  LossMode mode = LossMode::vanilla;

  std::size_t input_width() const { return conditioning ? 4 : 1; }
};

/// Bidirectional recurrent layer over the completed target series with a
/// per-step head on [h_f, h_b]:
///   dfwd.<cell>, dbwd.<cell>, head.W (1 x 2H), head.b (1)
struct DiscriminatorParams {
  ParamMap tensors;

  static DiscriminatorParams initialize(const DiscriminatorConfig& config, Rng& rng);

  /// Clamps every weight into [-limit, limit].
  void clip(double limit);
  double max_abs() const;
};

/// Per-step scores, B x n. Vanilla mode applies a sigmoid (probability the
/// value is real); Wasserstein mode returns raw critic scores.
/// `batch` supplies the conditioning channels when enabled.
Var discriminate(Tape& tape, const BoundParams& p, Var completed, const Batch& batch,
                 const DiscriminatorConfig& config);

/// Clamp applied to probabilities before taking logs.
inline constexpr double kLogEpsilon = 1e-12;

/// Vanilla: -mean_{m=1} log p - mean_{m=0} log(1-p).
/// Wasserstein: mean_{m=0} p - mean_{m=1} p. Empty classes contribute 0.
Var loss_discriminator(Var scores, const Array& mask, LossMode mode);

/// Vanilla: mean_{m=0} log(1-p), or -mean_{m=0} log p when non-saturating.
/// Wasserstein: -mean_{m=0} p. Zero when nothing is missing.
Var loss_generator_adversarial(Var scores, const Array& mask, LossMode mode, bool non_saturating);

}  // namespace bigan
