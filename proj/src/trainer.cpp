// SPDX-License-Identifier: Apache-2.0
#include "bigan/trainer.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "bigan/corruption.hpp"
#include "bigan/errors.hpp"
#include "bigan/losses.hpp"
#include "bigan/rng.hpp"
#include "bigan/tensor_io.hpp"

namespace bigan {

namespace {

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

// TrainConfig ----------------------------------------------------------------------

GeneratorConfig TrainConfig::generator() const { return {hidden, cell, no_lambda, normalize_combination}; }

DiscriminatorConfig TrainConfig::discriminator() const { return {disc_hidden, disc_cell, disc_conditioning, loss_mode}; }

AdamConfig TrainConfig::adam_generator() const {
  return {loss_mode == LossMode::wasserstein ? wasserstein_lr : lr_g, beta1, beta2, epsilon};
}

AdamConfig TrainConfig::adam_discriminator() const {
  return {loss_mode == LossMode::wasserstein ? wasserstein_lr : lr_d, beta1, beta2, epsilon};
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(hidden > 0 && disc_hidden > 0, "hidden widths must be positive");
  require(batch_size > 0, "batch_size must be positive");
  require(lr_g > 0 && lr_d > 0 && wasserstein_lr > 0, "learning rates must be positive");
  require(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1, "moment decays must lie in [0, 1)");
  require(epsilon > 0, "epsilon must be positive");
  require(clip > 0, "clip must be positive");
  require(n_critic > 0, "n_critic must be positive");
  require(corruption_rate >= 0 && corruption_rate < 1, "corruption_rate must lie in [0, 1)");
  require(val_rate > 0 && val_rate < 1, "val_rate must lie in (0, 1)");
  require(val_fraction > 0 && val_fraction < 1, "val_fraction must lie in (0, 1)");
  require(weight_r >= 0 && weight_c >= 0 && weight_g >= 0, "loss weights must be non-negative");
}

std::string TrainConfig::canonical() const {
  std::map<std::string, std::string> kv{
      {"batch_size", std::to_string(batch_size)},
      {"beta1", format_double(beta1)},
      {"beta2", format_double(beta2)},
      {"cell", cell_kind_name(cell)},
      {"clip", format_double(clip)},
      {"corruption_rate", format_double(corruption_rate)},
      {"disc_cell", cell_kind_name(disc_cell)},
      {"disc_conditioning", disc_conditioning ? "true" : "false"},
      {"disc_hidden", std::to_string(disc_hidden)},
      {"epochs", std::to_string(epochs)},
      {"epsilon", format_double(epsilon)},
      {"hidden", std::to_string(hidden)},
      {"loss_mode", loss_mode_name(loss_mode)},
      {"lr_d", format_double(lr_d)},
      {"lr_g", format_double(lr_g)},
      {"n_critic", std::to_string(n_critic)},
      {"no_gan", no_gan ? "true" : "false"},
      {"no_lambda", no_lambda ? "true" : "false"},
      {"non_saturating_g", non_saturating_g ? "true" : "false"},
      {"normalize_combination", normalize_combination ? "true" : "false"},
      {"patience", std::to_string(patience)},
      {"seed", std::to_string(seed)},
      {"val_fraction", format_double(val_fraction)},
      {"val_rate", format_double(val_rate)},
      {"val_seed", std::to_string(val_seed)},
      {"wasserstein_lr", format_double(wasserstein_lr)},
      {"weight_c", format_double(weight_c)},
      {"weight_g", format_double(weight_g)},
      {"weight_r", format_double(weight_r)},
  };
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t TrainConfig::hash() const { return fnv1a(canonical()); }

// Checkpoint ---------------------------------------------------------------------

namespace {

constexpr char kCheckpointMagic[4] = {'B', 'G', 'A', 'N'};
constexpr std::uint32_t kCheckpointVersion = 1;

Array meta(std::initializer_list<double> values) { return Array::vector(values); }

bool same_tensors(const ParamMap& a, const ParamMap& b) {
  if (a.size() != b.size()) return false;
  for (const auto& [name, value] : a) {
    const auto it = b.find(name);
    if (it == b.end() || it->second.shape() != value.shape()) return false;
    for (std::size_t k = 0; k < value.size(); ++k)
      if (std::bit_cast<std::uint64_t>(value[k]) != std::bit_cast<std::uint64_t>(it->second[k])) return false;
  }
  return true;
}

}  // namespace

bool Checkpoint::operator==(const Checkpoint& o) const {
  const auto same_gc = generator_config.hidden == o.generator_config.hidden &&
                       generator_config.cell == o.generator_config.cell &&
                       generator_config.no_lambda == o.generator_config.no_lambda &&
                       generator_config.normalize_combination == o.generator_config.normalize_combination;
  const auto same_dc = discriminator_config.hidden == o.discriminator_config.hidden &&
                       discriminator_config.cell == o.discriminator_config.cell &&
                       discriminator_config.conditioning == o.discriminator_config.conditioning &&
                       discriminator_config.mode == o.discriminator_config.mode;
  const bool same_d = discriminator.has_value() == o.discriminator.has_value() &&
                      (!discriminator || same_tensors(discriminator->tensors, o.discriminator->tensors));
  return same_gc && same_dc && same_d && same_tensors(generator.tensors, o.generator.tensors) &&
         norm.mean == o.norm.mean && norm.stddev == o.norm.stddev && target == o.target &&
         config_hash == o.config_hash && epoch == o.epoch &&
         std::bit_cast<std::uint64_t>(val_mae) == std::bit_cast<std::uint64_t>(o.val_mae);
}

void write_checkpoint(const Checkpoint& ckpt, std::ostream& out) {
  std::vector<NamedTensor> tensors;
  for (const auto& [name, value] : ckpt.generator.tensors) tensors.push_back({"G." + name, value});
  if (ckpt.discriminator)
    for (const auto& [name, value] : ckpt.discriminator->tensors) tensors.push_back({"D." + name, value});
  tensors.push_back({"norm.mean", Array::vector(std::span<const double>(ckpt.norm.mean))});
  tensors.push_back({"norm.std", Array::vector(std::span<const double>(ckpt.norm.stddev))});
  const auto& gc = ckpt.generator_config;
  const auto& dc = ckpt.discriminator_config;
  tensors.push_back({"meta.generator", meta({static_cast<double>(gc.hidden), gc.cell == CellKind::lstm ? 1.0 : 0.0,
                                            gc.no_lambda ? 1.0 : 0.0, gc.normalize_combination ? 1.0 : 0.0})});
  tensors.push_back({"meta.discriminator",
                     meta({static_cast<double>(dc.hidden), dc.cell == CellKind::lstm ? 1.0 : 0.0,
                           dc.conditioning ? 1.0 : 0.0, dc.mode == LossMode::wasserstein ? 1.0 : 0.0})});
  tensors.push_back({"meta.target", meta({static_cast<double>(ckpt.target)})});
  tensors.push_back({"meta.config_hash", meta({static_cast<double>(ckpt.config_hash >> 32),
                                               static_cast<double>(ckpt.config_hash & 0xFFFFFFFFULL)})});
  tensors.push_back({"meta.epoch", meta({static_cast<double>(ckpt.epoch)})});
  tensors.push_back({"meta.val_mae", meta({ckpt.val_mae})});
  out.write(kCheckpointMagic, 4);
  write_u32(out, kCheckpointVersion);
  write_tensors(out, tensors);
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kCheckpointMagic)) {
    throw DataError("not a checkpoint file (bad magic)");
  }
  const std::uint32_t version = read_u32(in);
  if (version != kCheckpointVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  ParamMap d_tensors;
  std::map<std::string, Array> metas;
  for (auto& t : read_tensors(in)) {
    if (t.name.rfind("G.", 0) == 0) {
      ckpt.generator.tensors.emplace(t.name.substr(2), std::move(t.value));
    } else if (t.name.rfind("D.", 0) == 0) {
      d_tensors.emplace(t.name.substr(2), std::move(t.value));
    } else {
      metas.emplace(t.name, std::move(t.value));
    }
  }
  auto get = [&](const std::string& name, std::size_t size) -> const Array& {
    const auto it = metas.find(name);
    if (it == metas.end()) throw DataError("checkpoint: missing entry '" + name + "'");
    if (size && it->second.size() != size) throw DataError("checkpoint: entry '" + name + "' has the wrong size");
    return it->second;
  };
  const Array& g = get("meta.generator", 4);
  ckpt.generator_config = {static_cast<std::size_t>(g[0]), g[1] != 0 ? CellKind::lstm : CellKind::simple, g[2] != 0,
                           g[3] != 0};
  const Array& d = get("meta.discriminator", 4);
  ckpt.discriminator_config = {static_cast<std::size_t>(d[0]), d[1] != 0 ? CellKind::lstm : CellKind::simple,
                               d[2] != 0, d[3] != 0 ? LossMode::wasserstein : LossMode::vanilla};
  const Array& mean = get("norm.mean", 0);
  const Array& sd = get("norm.std", 0);
  ckpt.norm.mean.assign(mean.data().begin(), mean.data().end());
  ckpt.norm.stddev.assign(sd.data().begin(), sd.data().end());
  ckpt.target = static_cast<std::size_t>(get("meta.target", 1)[0]);
  const Array& h = get("meta.config_hash", 2);
  ckpt.config_hash = (static_cast<std::uint64_t>(h[0]) << 32) | static_cast<std::uint64_t>(h[1]);
  ckpt.epoch = static_cast<std::size_t>(get("meta.epoch", 1)[0]);
  ckpt.val_mae = get("meta.val_mae", 1)[0];
  if (!d_tensors.empty()) ckpt.discriminator = DiscriminatorParams{std::move(d_tensors)};
  if (ckpt.generator.tensors.empty()) throw DataError("checkpoint: no generator weights");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_checkpoint(ckpt, out);
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_checkpoint(in);
}

// Log --------------------------------------------------------------------------------

std::string EpochLog::csv() const {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("NA"); };
  return std::to_string(epoch) + "," + format_double(loss_r) + "," + format_double(loss_c) + "," + opt(loss_g) + "," +
         opt(loss_d) + "," + (std::isnan(val_mae) ? std::string("NA") : format_double(val_mae));
}

// Trainer ----------------------------------------------------------------------------

Trainer::Trainer(const TrainConfig& config, std::size_t features)
    : config_(config), opt_g_(config.adam_generator()), opt_d_(config.adam_discriminator()) {
  config_.validate();
  Rng rng(config_.seed);
  generator_ = GeneratorParams::initialize(features, config_.generator(), rng);
  if (!config_.no_gan) discriminator_ = DiscriminatorParams::initialize(config_.discriminator(), rng);
}

Array Trainer::complete(const Batch& input) const {
  Tape tape;
  const BoundParams p = tape.bind_frozen(generator_.tensors);
  return generate(tape, p, input, config_.generator()).completed.value();
}

double Trainer::update_discriminator(const Batch& input, const Array& completed) {
  if (!discriminator_) throw std::logic_error("update_discriminator without a discriminator");
  const DiscriminatorConfig dc = config_.discriminator();
  const std::size_t rounds = dc.mode == LossMode::wasserstein ? config_.n_critic : 1;
  double last = 0.0;
  for (std::size_t r = 0; r < rounds; ++r) {
    Tape tape;
    const BoundParams p = tape.bind(discriminator_->tensors);
    const Var scores = discriminate(tape, p, tape.constant(completed), input, dc);
    const Var loss = loss_discriminator(scores, input.target_mask, dc.mode);
    tape.backward(loss);
    opt_d_.step(discriminator_->tensors, tape.grads(p));
    if (dc.mode == LossMode::wasserstein) discriminator_->clip(config_.clip);
    last = loss.value()[0];
  }
  return last;
}

StepLosses Trainer::update_generator(const Batch& input, const Array& target, const Array& mask) {
  const GeneratorConfig gc = config_.generator();
  Tape tape;
  const BoundParams p = tape.bind(generator_.tensors);
  const GeneratorGraph g = generate(tape, p, input, gc);
  const Var rec = loss_reconstruction(g.combined, target, mask);
  const Var cons = loss_consistency(g.est_fwd, g.est_bwd);
  Var total = add(affine(rec, config_.weight_r, 0.0), affine(cons, config_.weight_c, 0.0));
  StepLosses out;
  if (discriminator_) {
    const DiscriminatorConfig dc = config_.discriminator();
    const BoundParams frozen = tape.bind_frozen(discriminator_->tensors);
    const Var scores = discriminate(tape, frozen, g.completed, input, dc);
    const Var adv = loss_generator_adversarial(scores, input.target_mask, dc.mode, config_.non_saturating_g);
    total = add(total, affine(adv, config_.weight_g, 0.0));
    out.adversarial = adv.value()[0];
  }
  tape.backward(total);
  const bool skip_lambda = gc.no_lambda;
  opt_g_.step(generator_.tensors, tape.grads(p),
              [skip_lambda](const std::string& name) { return !(skip_lambda && GeneratorParams::is_lambda(name)); });
  out.reconstruction = rec.value()[0];
  out.consistency = cons.value()[0];
  out.total = total.value()[0];
  return out;
}

StepLosses Trainer::step(const Batch& input, const Array& target, const Array& mask) {
  double loss_d = 0.0;
  if (discriminator_) loss_d = update_discriminator(input, complete(input));
  StepLosses out = update_generator(input, target, mask);
  out.discriminator = loss_d;
  return out;
}

// Training loop ---------------------------------------------------------------------

namespace {

struct ValidationSet {
  std::vector<SeriesSample> corrupted;
  std::vector<std::vector<double>> truth;
  std::vector<std::vector<double>> eval;
  std::size_t cells = 0;
};

ValidationSet build_validation(const Dataset& data, std::span<const std::size_t> which, double rate,
                               std::uint64_t seed) {
  ValidationSet v;
  for (std::size_t k = 0; k < which.size(); ++k) {
    const SeriesSample& s = data.samples[which[k]];
    try {
      CorruptionPlan plan = corrupt_imputation(s, rate, mix_seed(seed, which[k]));
      const std::size_t cells = plan.eval_count();
      if (cells == 0) continue;
      v.cells += cells;
      v.truth.push_back(std::move(plan.truth));
      v.eval.push_back(std::move(plan.eval_mask));
      v.corrupted.push_back(std::move(plan.corrupted));
    } catch (const std::invalid_argument&) {
      // sample has too few observed target cells to hold any out
    }
  }
  return v;
}

double score_validation(const Dataset& data, const ValidationSet& v, const GeneratorParams& params,
                        const GeneratorConfig& config) {
  if (v.cells == 0) return std::numeric_limits<double>::quiet_NaN();
  const auto filled = impute_with_generator(params, v.corrupted, config);
  double total = 0.0;
  for (std::size_t k = 0; k < filled.size(); ++k)
    for (std::size_t i = 0; i < filled[k].size(); ++i)
      if (v.eval[k][i] == 1.0)
        total += std::fabs(data.denormalize_target(v.truth[k][i]) - data.denormalize_target(filled[k][i]));
  return total / static_cast<double>(v.cells);
}

}  // namespace

double validation_mae(const Dataset& data, std::span<const std::size_t> which, const GeneratorParams& params,
                      const GeneratorConfig& config, double rate, std::uint64_t seed) {
  return score_validation(data, build_validation(data, which, rate, seed), params, config);
}

TrainResult train(const Dataset& data, const TrainConfig& config, const std::function<void(const EpochLog&)>& on_epoch) {
  config.validate();
  data.validate();
  std::vector<std::size_t> train_idx = data.indices(Split::train);
  std::vector<std::size_t> val_idx = data.indices(Split::validation);
  if (train_idx.empty()) throw DataError("train: dataset has no train-split samples");
  if (val_idx.empty()) {
    // Carve a validation subset out of the train split.
    std::vector<std::size_t> order = train_idx;
    Rng carve(mix_seed(config.seed, 0x7661));
    carve.shuffle(order);
    const auto n_val = static_cast<std::size_t>(std::ceil(config.val_fraction * static_cast<double>(order.size())));
    if (n_val == 0 || n_val >= order.size()) throw DataError("train: too few samples to carve a validation set");
    val_idx.assign(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
    order.resize(order.size() - n_val);
    std::sort(order.begin(), order.end());
    std::sort(val_idx.begin(), val_idx.end());
    train_idx = std::move(order);
  }

  Trainer trainer(config, data.features());
  const GeneratorConfig gc = config.generator();
  const ValidationSet validation = build_validation(data, val_idx, config.val_rate, config.val_seed);

  TrainResult result;
  Checkpoint& best = result.checkpoint;
  auto snapshot = [&](std::size_t epoch, double val) {
    best.generator = trainer.generator();
    best.discriminator = trainer.discriminator() ? std::optional(*trainer.discriminator()) : std::nullopt;
    best.epoch = epoch;
    best.val_mae = val;
  };
  best.generator_config = gc;
  best.discriminator_config = config.discriminator();
  best.norm = data.norm;
  best.target = data.target;
  best.config_hash = config.hash();
  snapshot(0, score_validation(data, validation, trainer.generator(), gc));

  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<std::size_t> order = train_idx;
    Rng rng(mix_seed(config.seed, epoch));
    rng.shuffle(order);
    double sum_r = 0, sum_c = 0, sum_g = 0, sum_d = 0, sum_total = 0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, order.size() - start);
      std::vector<const SeriesSample*> originals;
      std::vector<SeriesSample> corrupted;
      for (std::size_t k = 0; k < count; ++k) {
        const SeriesSample& s = data.samples[order[start + k]];
        originals.push_back(&s);
        if (config.corruption_rate > 0.0) {
          try {
            corrupted.push_back(
                corrupt_imputation(s, config.corruption_rate, mix_seed(config.seed ^ (epoch << 32), order[start + k]))
                    .corrupted);
          } catch (const std::invalid_argument&) {
            corrupted.push_back(s);
          }
        }
      }
      const Batch reference = Batch::from_samples(std::span<const SeriesSample* const>(originals));
      const Batch input = config.corruption_rate > 0.0 ? Batch::from_samples(std::span<const SeriesSample>(corrupted))
                                                       : reference;
      StepLosses losses;
      try {
        losses = trainer.step(input, reference.target_values, reference.target_mask);
      } catch (const DivergenceError& e) {
        throw DivergenceError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(batches) + ": " +
                              e.what());
      }
      sum_r += losses.reconstruction;
      sum_c += losses.consistency;
      sum_g += losses.adversarial;
      sum_d += losses.discriminator;
      sum_total += losses.total;
      ++batches;
    }
    const double nb = static_cast<double>(batches);
    EpochLog entry;
    entry.epoch = epoch;
    entry.loss_r = sum_r / nb;
    entry.loss_c = sum_c / nb;
    if (!config.no_gan) {
      entry.loss_g = sum_g / nb;
      entry.loss_d = sum_d / nb;
    }
    entry.total = sum_total / nb;
    entry.val_mae = score_validation(data, validation, trainer.generator(), gc);
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);

    if (std::isnan(entry.val_mae) || std::isnan(best.val_mae) || entry.val_mae < best.val_mae) {
      snapshot(epoch, entry.val_mae);
      since_best = 0;
    } else if (++since_best >= config.patience) {
      result.early_stopped = true;
      break;
    }
  }
  return result;
}

}  // namespace bigan
