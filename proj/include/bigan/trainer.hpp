// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bigan/dataset.hpp"
#include "bigan/discriminator.hpp"
#include "bigan/generator.hpp"
#include "bigan/optimizer.hpp"

namespace bigan {

struct TrainConfig {
  // model
  std::size_t hidden = 32;
  std::size_t disc_hidden = 32;
  CellKind cell = CellKind::simple;
  CellKind disc_cell = CellKind::simple;
  bool disc_conditioning = false;
  // optimisation
  std::size_t epochs = 300;
  std::size_t batch_size = 32;
  double lr_g = 1e-3;
  double lr_d = 1e-3;
  double wasserstein_lr = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 42;
  // losses and ablations
  LossMode loss_mode = LossMode::vanilla;
  bool no_gan = false;
  bool no_lambda = false;
  bool normalize_combination = false;
  bool non_saturating_g = false;
  double weight_r = 1.0;
  double weight_c = 1.0;
  double weight_g = 1.0;
  double clip = 0.01;
  std::size_t n_critic = 5;
  // data protocol
  double corruption_rate = 0.0;
  std::size_t patience = 10;
  double val_rate = 0.1;
  std::uint64_t val_seed = 7;
  double val_fraction = 0.1;  // carved from train when no validation split exists

  GeneratorConfig generator() const;
  DiscriminatorConfig discriminator() const;
  AdamConfig adam_generator() const;
  AdamConfig adam_discriminator() const;

  /// Throws ConfigError on non-positive sizes/rates or out-of-range fractions.
  void validate() const;

  /// Sorted key=value lines covering every field; the basis of hash().
  std::string canonical() const;
  std::uint64_t hash() const;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

struct Checkpoint {
  GeneratorParams generator;
  std::optional<DiscriminatorParams> discriminator;
  GeneratorConfig generator_config;
  DiscriminatorConfig discriminator_config;
  NormStats norm;
  std::size_t target = 0;
  std::uint64_t config_hash = 0;
  std::size_t epoch = 0;
  double val_mae = 0.0;

  bool operator==(const Checkpoint& other) const;
};

/// "BGAN", version (u32), then the tensor block of tensor_io.hpp with
/// G.* / D.* weights, norm.mean, norm.std and meta.* scalars.
void write_checkpoint(const Checkpoint& ckpt, std::ostream& out);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct StepLosses {
  double reconstruction = 0.0;
  double consistency = 0.0;
  double adversarial = 0.0;  // loss_G
  double discriminator = 0.0;  // loss_D (last critic step)
  double total = 0.0;          // weighted generator objective
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss_r = 0.0;
  double loss_c = 0.0;
  std::optional<double> loss_g;
  std::optional<double> loss_d;
  double total = 0.0;
  double val_mae = 0.0;

  /// epoch,loss_R,loss_c,loss_G,loss_D,val_MAE ("NA" for absent values).
  std::string csv() const;
};

inline constexpr const char* kTrainLogHeader = "epoch,loss_R,loss_c,loss_G,loss_D,val_MAE";

/// Owns both networks and their optimisers; one batch update is
///   1. generator forward producing x_bar,
///   2. critic update(s) on x_bar with the generator frozen,
///   3. generator update on loss_R + loss_c + loss_G with the critic frozen.
class Trainer {
 public:
  Trainer(const TrainConfig& config, std::size_t features);

  const TrainConfig& config() const noexcept { return config_; }
  const GeneratorParams& generator() const noexcept { return generator_; }
  GeneratorParams& generator() noexcept { return generator_; }
  const DiscriminatorParams* discriminator() const { return discriminator_ ? &*discriminator_ : nullptr; }
  DiscriminatorParams* discriminator() { return discriminator_ ? &*discriminator_ : nullptr; }

  /// Phase 1: x_bar (B x n) for `input` with current generator weights.
  Array complete(const Batch& input) const;
  /// Phase 2: critic steps on a fixed x_bar; returns the last loss_D.
  double update_discriminator(const Batch& input, const Array& completed);
  /// Phase 3: generator step. loss_R is scored against (target, mask).
  StepLosses update_generator(const Batch& input, const Array& target, const Array& mask);
  /// Phases 1-3 in order.
  StepLosses step(const Batch& input, const Array& target, const Array& mask);

 private:
  TrainConfig config_;
  GeneratorParams generator_;
  std::optional<DiscriminatorParams> discriminator_;
  Adam opt_g_;
  Adam opt_d_;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
  bool early_stopped = false;
};

/// Trains on the train split with early stopping on validation imputation MAE
/// (original units). Returns the best-validation weights. Each epoch's log
/// line is passed to `on_epoch` when provided.
TrainResult train(const Dataset& data, const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

/// Validation scorer used for early stopping: MAE over cells deleted by
/// corrupt_imputation(rate, mix_seed(seed, k)) for sample k, in original units.
/// Returns NaN when no cell could be deleted.
double validation_mae(const Dataset& data, std::span<const std::size_t> which, const GeneratorParams& params,
                      const GeneratorConfig& config, double rate, std::uint64_t seed);

}  // namespace bigan
