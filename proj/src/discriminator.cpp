// SPDX-License-Identifier: Apache-2.0
#include "bigan/discriminator.hpp"

#include <algorithm>
#include <cmath>

#include "bigan/errors.hpp"

namespace bigan {

LossMode parse_loss_mode(const std::string& name) {
  if (name == "vanilla") return LossMode::vanilla;
  if (name == "wasserstein") return LossMode::wasserstein;
  throw ConfigError("unknown loss mode '" + name + "' (expected vanilla|wasserstein)");
}

std::string loss_mode_name(LossMode mode) { return mode == LossMode::wasserstein ? "wasserstein" : "vanilla"; }

DiscriminatorParams DiscriminatorParams::initialize(const DiscriminatorConfig& config, Rng& rng) {
  DiscriminatorParams p;
  const std::size_t h = config.hidden;
  init_cell(p.tensors, "dfwd.", config.cell, h, config.input_width(), rng);
  init_cell(p.tensors, "dbwd.", config.cell, h, config.input_width(), rng);
  const double bound = 1.0 / std::sqrt(static_cast<double>(2 * h));
  p.tensors["head.W"] = uniform_array({1, 2 * h}, bound, rng);
  p.tensors["head.b"] = uniform_array({1}, bound, rng);
  return p;
}

void DiscriminatorParams::clip(double limit) {
  for (auto& [name, value] : tensors)
    for (auto& v : value.data()) v = std::clamp(v, -limit, limit);
}

double DiscriminatorParams::max_abs() const {
  double m = 0.0;
  for (const auto& [name, value] : tensors)
    for (double v : value.data()) m = std::max(m, std::fabs(v));
  return m;
}

Var discriminate(Tape& tape, const BoundParams& p, Var completed, const Batch& batch,
                 const DiscriminatorConfig& config) {
  const std::size_t B = completed.value().rows(), n = completed.value().cols();
  const std::size_t H = param(p, "head.W").value().cols() / 2;

  std::vector<Var> inputs(n);
  for (std::size_t i = 0; i < n; ++i) {
    Var x = slice_cols(completed, i, 1);
    if (config.conditioning) {
      Array extra = Array::matrix(B, 3);
      for (std::size_t r = 0; r < B; ++r) {
        extra(r, 0) = batch.target_mask(r, i);
        extra(r, 1) = batch.delta_fwd[i](r, batch.target);
        extra(r, 2) = batch.delta_bwd[i](r, batch.target);
      }
      const Var parts[] = {x, tape.constant(std::move(extra))};
      x = concat_cols(parts);
    }
    inputs[i] = x;
  }

  auto run = [&](const std::string& prefix, bool reverse) {
    std::vector<Var> hidden(n);
    Var h = tape.constant(Array::matrix(B, H));
    Var c = config.cell == CellKind::lstm ? tape.constant(Array::matrix(B, H)) : Var();
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = reverse ? n - 1 - k : k;
      const CellState next = cell_step(p, prefix, config.cell, h, c, inputs[i]);
      hidden[i] = next.h;
      h = next.h;
      c = next.c;
    }
    return hidden;
  };
  const auto hf = run("dfwd.", false);
  const auto hb = run("dbwd.", true);

  const Var w = param(p, "head.W"), b = param(p, "head.b");
  std::vector<Var> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Var parts[] = {hf[i], hb[i]};
    const Var logit = add_bias(matmul_nt(concat_cols(parts), w), b);
    scores[i] = config.mode == LossMode::vanilla ? sigmoid(logit) : logit;
  }
  return concat_cols(scores);
}

namespace {

// Weights selecting one class and averaging over it; all zero if the class is empty.
Array class_weights(const Array& mask, double cls) {
  Array w(mask.shape());
  double count = 0.0;
  for (std::size_t k = 0; k < mask.size(); ++k) count += mask[k] == cls;
  if (count == 0.0) return w;
  for (std::size_t k = 0; k < mask.size(); ++k) w[k] = mask[k] == cls ? 1.0 / count : 0.0;
  return w;
}

Var safe_log(Var p) { return log(clamp(p, kLogEpsilon, 1.0 - kLogEpsilon)); }

}  // namespace

Var loss_discriminator(Var scores, const Array& mask, LossMode mode) {
  const Array real = class_weights(mask, 1.0), fake = class_weights(mask, 0.0);
  if (mode == LossMode::wasserstein) return sub(weighted_sum(scores, fake), weighted_sum(scores, real));
  const Var real_term = weighted_sum(safe_log(scores), real);
  const Var fake_term = weighted_sum(safe_log(affine(scores, -1.0, 1.0)), fake);
  return negate(add(real_term, fake_term));
}

Var loss_generator_adversarial(Var scores, const Array& mask, LossMode mode, bool non_saturating) {
  const Array fake = class_weights(mask, 0.0);
  if (mode == LossMode::wasserstein) return negate(weighted_sum(scores, fake));
  if (non_saturating) return negate(weighted_sum(safe_log(scores), fake));
  return weighted_sum(safe_log(affine(scores, -1.0, 1.0)), fake);
}

}  // namespace bigan
