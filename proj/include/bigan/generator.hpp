// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "bigan/dataset.hpp"
#include "bigan/recurrent.hpp"

namespace bigan {

struct GeneratorConfig {
  std::size_t hidden = 32;
  CellKind cell = CellKind::simple;
  bool no_lambda = false;              // x~ = (x~f + x~b) / 2, lambda weights unused
  bool normalize_combination = false;  // rescale lambda_f, lambda_b to sum to 1
};

/// Trainable tensors of the generator, keyed by name:
///   {fwd,bwd}.<cell weights>      recurrent cell (see recurrent.hpp)
///   {fwd,bwd}.W_gamma (H x d), .b_gamma (H)   temporal decay of the hidden state
///   {fwd,bwd}.W_x (1 x H), .b_x (1)           regression head
///   comb.W_lambda_{f,b} (1 x d), comb.b_lambda_{f,b} (1)   combination factors
inline constexpr double kDecayBiasInit = 0.01;

struct GeneratorParams {
  ParamMap tensors;

  /// Recurrent and regression weights ~ U[-1/sqrt(H), 1/sqrt(H)]; decay and
  /// combination weights start at zero and their biases at kDecayBiasInit,
  /// so gamma and lambda start just below 1 with a live relu.
  static GeneratorParams initialize(std::size_t features, const GeneratorConfig& config, Rng& rng);

  static bool is_lambda(const std::string& name);

  std::size_t features() const;
  std::size_t hidden() const;
  const Array& at(const std::string& name) const { return tensors.at(name); }
  Array& at(const std::string& name) { return tensors.at(name); }
};

/// Constant, time-major view of a batch of equally shaped samples.
struct Batch {
  std::size_t size = 0;
  std::size_t steps = 0;
  std::size_t features = 0;
  std::size_t target = 0;
  std::vector<Array> inputs;     // per step, B x d with the target column zeroed
  std::vector<Array> delta_fwd;  // per step, B x d
  std::vector<Array> delta_bwd;  // per step, B x d
  std::vector<Array> target_observed;  // per step, B x 1: x * m
  std::vector<Array> target_missing;   // per step, B x 1: 1 - m
  Array target_values;           // B x n, x * m
  Array target_mask;             // B x n

  static Batch from_samples(std::span<const SeriesSample* const> samples);
  static Batch from_samples(std::span<const SeriesSample> samples);
};

enum class Direction { forward, backward };

/// Per-step outputs of one direction, stored in original time order.
struct DirectionPass {
  std::vector<Var> estimates;  // B x 1: x~_i from h_{i-1}
  std::vector<Var> hidden;     // B x H: h_i
  std::vector<Var> decay;      // B x H: gamma_i
};

/// gamma = exp(-max(0, delta W^T + b)); delta is B x d, W is H x d.
Var decay(Var delta, Var weight, Var bias);

/// Unrolls one direction. At each step the estimate is read from the
/// previous hidden state before the step's input is consumed; the target
/// input is then the observation where present and the estimate where
/// missing, and the carried state is h_{i-1} * gamma_i.
DirectionPass unroll(Tape& tape, const BoundParams& p, const Batch& batch, Direction dir,
                     const GeneratorConfig& config);

/// x~ = lambda_f x~f + lambda_b x~b (optionally with lambdas normalised).
Var combine(Var est_fwd, Var est_bwd, Var lambda_fwd, Var lambda_bwd, bool normalize);

/// x_bar = x * m + x~ * (1 - m) with x and m constant.
Var replace_missing(Var estimate, const Array& observed, const Array& mask);

struct GeneratorGraph {
  DirectionPass fwd;
  DirectionPass bwd;
  Var est_fwd;     // B x n
  Var est_bwd;     // B x n
  Var lambda_fwd;  // B x n
  Var lambda_bwd;  // B x n
  Var combined;    // x~, B x n
  Var completed;   // x_bar, B x n
};

GeneratorGraph generate(Tape& tape, const BoundParams& p, const Batch& batch, const GeneratorConfig& config);

/// Plain-value generator output for one sample.
struct GeneratorOutput {
  std::vector<double> est_fwd, est_bwd, lambda_fwd, lambda_bwd, combined, completed;
  Array hidden_fwd, hidden_bwd;  // n x H
};

GeneratorOutput run_generator(const GeneratorParams& params, const SeriesSample& sample,
                              const GeneratorConfig& config);

/// x_bar for each sample (same units as the sample values).
std::vector<std::vector<double>> impute_with_generator(const GeneratorParams& params,
                                                       std::span<const SeriesSample> samples,
                                                       const GeneratorConfig& config,
                                                       std::size_t batch_size = 64);

}  // namespace bigan
