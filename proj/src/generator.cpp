// SPDX-License-Identifier: Apache-2.0
#include "bigan/generator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bigan {

namespace {

const char* prefix_of(Direction dir) { return dir == Direction::forward ? "fwd." : "bwd."; }

}  // namespace

GeneratorParams GeneratorParams::initialize(std::size_t features, const GeneratorConfig& config, Rng& rng) {
  if (features == 0 || config.hidden == 0) throw std::invalid_argument("generator: empty feature or hidden width");
  GeneratorParams p;
  const std::size_t h = config.hidden;
  const double bound = 1.0 / std::sqrt(static_cast<double>(h));
  for (const char* prefix : {"fwd.", "bwd."}) {
    const std::string pre = prefix;
    init_cell(p.tensors, pre, config.cell, h, features, rng);
    p.tensors[pre + "W_gamma"] = Array::matrix(h, features);
    p.tensors[pre + "b_gamma"] = Array(Shape{h}, kDecayBiasInit);
    p.tensors[pre + "W_x"] = uniform_array({1, h}, bound, rng);
    p.tensors[pre + "b_x"] = uniform_array({1}, bound, rng);
  }
  p.tensors["comb.W_lambda_f"] = Array::matrix(1, features);
  p.tensors["comb.b_lambda_f"] = Array(Shape{1}, kDecayBiasInit);
  p.tensors["comb.W_lambda_b"] = Array::matrix(1, features);
  p.tensors["comb.b_lambda_b"] = Array(Shape{1}, kDecayBiasInit);
  return p;
}

bool GeneratorParams::is_lambda(const std::string& name) { return name.rfind("comb.", 0) == 0; }

std::size_t GeneratorParams::features() const { return at("fwd.W_gamma").cols(); }
std::size_t GeneratorParams::hidden() const { return at("fwd.W_gamma").rows(); }

Batch Batch::from_samples(std::span<const SeriesSample> samples) {
  std::vector<const SeriesSample*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  return from_samples(std::span<const SeriesSample* const>(ptrs));
}

Batch Batch::from_samples(std::span<const SeriesSample* const> samples) {
  if (samples.empty()) throw std::invalid_argument("Batch: no samples");
  Batch b;
  b.size = samples.size();
  b.steps = samples.front()->steps();
  b.features = samples.front()->features();
  b.target = samples.front()->target;
  for (const auto* s : samples) {
    if (s->steps() != b.steps || s->features() != b.features || s->target != b.target) {
      throw ShapeError("Batch: sample '" + s->id + "' differs in shape or target");
    }
  }
  const std::size_t B = b.size, n = b.steps, d = b.features, t = b.target;
  b.target_values = Array::matrix(B, n);
  b.target_mask = Array::matrix(B, n);
  for (std::size_t i = 0; i < n; ++i) {
    Array in = Array::matrix(B, d), df = Array::matrix(B, d), db = Array::matrix(B, d);
    Array obs = Array::matrix(B, 1), miss = Array::matrix(B, 1);
    for (std::size_t r = 0; r < B; ++r) {
      const SeriesSample& s = *samples[r];
      for (std::size_t j = 0; j < d; ++j) {
        in(r, j) = j == t ? 0.0 : s.values(i, j) * s.mask(i, j);
        df(r, j) = s.delta_fwd(i, j);
        db(r, j) = s.delta_bwd(i, j);
      }
      const double m = s.mask(i, t);
      obs(r, 0) = s.values(i, t) * m;
      miss(r, 0) = 1.0 - m;
      b.target_values(r, i) = obs(r, 0);
      b.target_mask(r, i) = m;
    }
    b.inputs.push_back(std::move(in));
    b.delta_fwd.push_back(std::move(df));
    b.delta_bwd.push_back(std::move(db));
    b.target_observed.push_back(std::move(obs));
    b.target_missing.push_back(std::move(miss));
  }
  return b;
}

Var decay(Var delta, Var weight, Var bias) { return exp(negate(relu(add_bias(matmul_nt(delta, weight), bias)))); }

DirectionPass unroll(Tape& tape, const BoundParams& p, const Batch& batch, Direction dir,
                     const GeneratorConfig& config) {
  const std::string pre = prefix_of(dir);
  const std::size_t B = batch.size, n = batch.steps, H = param(p, pre + "W_gamma").value().rows();
  const Var w_gamma = param(p, pre + "W_gamma"), b_gamma = param(p, pre + "b_gamma");
  const Var w_x = param(p, pre + "W_x"), b_x = param(p, pre + "b_x");

  Array onehot = Array::matrix(1, batch.features);
  onehot(0, batch.target) = 1.0;
  const Var target_row = tape.constant(std::move(onehot));

  DirectionPass pass;
  pass.estimates.resize(n);
  pass.hidden.resize(n);
  pass.decay.resize(n);
  Var h = tape.constant(Array::matrix(B, H));
  Var c = config.cell == CellKind::lstm ? tape.constant(Array::matrix(B, H)) : Var();
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = dir == Direction::forward ? k : n - 1 - k;
    const Var estimate = add_bias(matmul_nt(h, w_x), b_x);
    const Var target_in = add(tape.constant(batch.target_observed[i]), mul_const(estimate, batch.target_missing[i]));
    const Var input = add(tape.constant(batch.inputs[i]), matmul(target_in, target_row));
    const auto& deltas = dir == Direction::forward ? batch.delta_fwd : batch.delta_bwd;
    const Var gamma = decay(tape.constant(deltas[i]), w_gamma, b_gamma);
    const CellState next = cell_step(p, pre, config.cell, mul(h, gamma), c, input);
    pass.estimates[i] = estimate;
    pass.hidden[i] = next.h;
    pass.decay[i] = gamma;
    h = next.h;
    c = next.c;
  }
  return pass;
}

Var combine(Var est_fwd, Var est_bwd, Var lambda_fwd, Var lambda_bwd, bool normalize) {
  const Var weighted = add(mul(lambda_fwd, est_fwd), mul(lambda_bwd, est_bwd));
  if (!normalize) return weighted;
  return div(weighted, add(lambda_fwd, lambda_bwd));
}

Var replace_missing(Var estimate, const Array& observed, const Array& mask) {
  Array kept = observed, fill(mask.shape());
  for (std::size_t k = 0; k < mask.size(); ++k) {
    kept[k] = observed[k] * mask[k];
    fill[k] = 1.0 - mask[k];
  }
  return add(estimate.tape()->constant(std::move(kept)), mul_const(estimate, fill));
}

GeneratorGraph generate(Tape& tape, const BoundParams& p, const Batch& batch, const GeneratorConfig& config) {
  GeneratorGraph g;
  g.fwd = unroll(tape, p, batch, Direction::forward, config);
  g.bwd = unroll(tape, p, batch, Direction::backward, config);
  g.est_fwd = concat_cols(g.fwd.estimates);
  g.est_bwd = concat_cols(g.bwd.estimates);
  const std::size_t n = batch.steps;
  if (config.no_lambda) {
    g.lambda_fwd = tape.constant(Array::matrix(batch.size, n, 0.5));
    g.lambda_bwd = tape.constant(Array::matrix(batch.size, n, 0.5));
    g.combined = affine(add(g.est_fwd, g.est_bwd), 0.5, 0.0);
  } else {
    std::vector<Var> lf(n), lb(n);
    const Var wf = param(p, "comb.W_lambda_f"), bf = param(p, "comb.b_lambda_f");
    const Var wb = param(p, "comb.W_lambda_b"), bb = param(p, "comb.b_lambda_b");
    for (std::size_t i = 0; i < n; ++i) {
      lf[i] = decay(tape.constant(batch.delta_fwd[i]), wf, bf);
      lb[i] = decay(tape.constant(batch.delta_bwd[i]), wb, bb);
    }
    g.lambda_fwd = concat_cols(lf);
    g.lambda_bwd = concat_cols(lb);
    g.combined = combine(g.est_fwd, g.est_bwd, g.lambda_fwd, g.lambda_bwd, config.normalize_combination);
  }
  g.completed = replace_missing(g.combined, batch.target_values, batch.target_mask);
  return g;
}

namespace {

std::vector<double> row_of(const Array& a, std::size_t r) {
  return std::vector<double>(a.data().begin() + static_cast<std::ptrdiff_t>(r * a.cols()),
                             a.data().begin() + static_cast<std::ptrdiff_t>((r + 1) * a.cols()));
}

Array stack_hidden(const std::vector<Var>& hidden) {
  const std::size_t n = hidden.size(), H = hidden.front().value().cols();
  Array out = Array::matrix(n, H);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < H; ++k) out(i, k) = hidden[i].value()(0, k);
  return out;
}

}  // namespace

GeneratorOutput run_generator(const GeneratorParams& params, const SeriesSample& sample,
                              const GeneratorConfig& config) {
  Tape tape;
  const BoundParams p = tape.bind_frozen(params.tensors);
  const Batch batch = Batch::from_samples(std::span<const SeriesSample>(&sample, 1));
  const GeneratorGraph g = generate(tape, p, batch, config);
  GeneratorOutput out;
  out.est_fwd = row_of(g.est_fwd.value(), 0);
  out.est_bwd = row_of(g.est_bwd.value(), 0);
  out.lambda_fwd = row_of(g.lambda_fwd.value(), 0);
  out.lambda_bwd = row_of(g.lambda_bwd.value(), 0);
  out.combined = row_of(g.combined.value(), 0);
  out.completed = row_of(g.completed.value(), 0);
  out.hidden_fwd = stack_hidden(g.fwd.hidden);
  out.hidden_bwd = stack_hidden(g.bwd.hidden);
  return out;
}

std::vector<std::vector<double>> impute_with_generator(const GeneratorParams& params,
                                                       std::span<const SeriesSample> samples,
                                                       const GeneratorConfig& config, std::size_t batch_size) {
  std::vector<std::vector<double>> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const std::size_t count = std::min(batch_size, samples.size() - start);
    Tape tape;
    const BoundParams p = tape.bind_frozen(params.tensors);
    const Batch batch = Batch::from_samples(samples.subspan(start, count));
    const GeneratorGraph g = generate(tape, p, batch, config);
    for (std::size_t r = 0; r < count; ++r) out.push_back(row_of(g.completed.value(), r));
  }
  return out;
}

}  // namespace bigan
