// SPDX-License-Identifier: Apache-2.0
// Acceptance run: `acceptance --criterion N --work DIR` prints one verdict
// line and exits 0 on PASS, 1 on FAIL.
#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "bigan/baselines.hpp"
#include "bigan/discriminator.hpp"
#include "bigan/errors.hpp"
#include "bigan/evaluation.hpp"
#include "bigan/generator.hpp"
#include "bigan/losses.hpp"
#include "bigan/synthetic.hpp"
#include "support.hpp"

using namespace bigan;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream out;
  out.precision(digits);
  out << v;
  return out.str();
}

// 1 -----------------------------------------------------------------------------

SeriesSample toy_sample(Rng& rng, std::size_t n, std::size_t d) {
  Array values = Array::matrix(n, d), observed = Array::matrix(n, d);
  std::vector<double> times(n);
  double now = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    times[i] = now;
    now += 1.0 + static_cast<double>(rng.below(3));
    for (std::size_t j = 0; j < d; ++j) {
      values(i, j) = rng.normal();
      observed(i, j) = rng.uniform() < 0.6 ? 1.0 : 0.0;
    }
  }
  observed(0, 0) = 1.0;
  observed(n - 1, 0) = 0.0;
  return make_sample("toy", values, observed, TimeGrid(times), 0);
}

ParamMap randomized(ParamMap p, Rng& rng, double scale) {
  for (auto& [name, value] : p) {
    for (auto& v : value.data()) v = rng.uniform(-scale, scale);
  }
  return p;
}

Verdict gradient_integrity() {
  // Entries where both gradients are under kFloor sit at the central
  // difference roundoff level (~1e-16 |L| / h) and are compared absolutely.
  constexpr double kStep = 1e-6, kRelative = 1e-4, kFloor = 1e-5, kAbsolute = 1e-8;
  const auto start = Clock::now();
  Rng rng(2024);
  double worst = 0.0, worst_abs = 0.0;
  std::size_t checked = 0, floored = 0, configs = 0;
  std::string where;
  auto record = [&](const testing::GradCheck& c, const std::string& label) {
    checked += c.checked;
    floored += c.below_floor;
    worst_abs = std::max(worst_abs, c.worst_abs);
    if (c.worst > worst) {
      worst = c.worst;
      where = label + " " + c.where;
    }
  };

  for (const LossMode mode : {LossMode::vanilla, LossMode::wasserstein}) {
    for (const CellKind cell : {CellKind::simple, CellKind::lstm}) {
      for (int flags = 0; flags < 4; ++flags) {
        for (const bool conditioning : {false, true}) {
          TrainConfig tc;
          tc.hidden = 3;
          tc.disc_hidden = 3;
          tc.cell = cell;
          tc.disc_cell = cell;
          tc.loss_mode = mode;
          tc.no_lambda = (flags & 1) != 0;
          tc.no_gan = (flags & 2) != 0;
          tc.disc_conditioning = conditioning;
          tc.weight_r = 1.0;
          tc.weight_c = 0.5;
          tc.weight_g = 0.7;
          const GeneratorConfig gc = tc.generator();
          const DiscriminatorConfig dc = tc.discriminator();
          const std::vector<SeriesSample> samples = {toy_sample(rng, 3, 2), toy_sample(rng, 3, 2)};
          const Batch batch = Batch::from_samples(std::span<const SeriesSample>(samples));
          const ParamMap gparams = randomized(GeneratorParams::initialize(2, gc, rng).tensors, rng, 0.7);
          const ParamMap dparams = randomized(DiscriminatorParams::initialize(dc, rng).tensors, rng, 0.7);
          const std::string label = std::string(loss_mode_name(mode)) + "/" + cell_kind_name(cell) + "/flags" +
                                    std::to_string(flags) + (conditioning ? "/cond" : "");

          auto g_loss = [&](Tape& t, const BoundParams& bound) {
            const GeneratorGraph g = generate(t, bound, batch, gc);
            Var total = add(affine(loss_reconstruction(g.combined, batch.target_values, batch.target_mask), tc.weight_r, 0.0),
                            affine(loss_consistency(g.est_fwd, g.est_bwd), tc.weight_c, 0.0));
            if (!tc.no_gan) {
              const Var p = discriminate(t, t.bind_frozen(dparams), g.completed, batch, dc);
              total = add(total, affine(loss_generator_adversarial(p, batch.target_mask, mode, tc.non_saturating_g),
                                        tc.weight_g, 0.0));
            }
            return total;
          };
          record(testing::check_gradients(gparams, g_loss, kStep, kFloor), "G " + label);
          ++configs;
          if (tc.no_gan) continue;
          auto d_loss = [&](Tape& t, const BoundParams& bound) {
            const GeneratorGraph g = generate(t, t.bind_frozen(gparams), batch, gc);
            return loss_discriminator(discriminate(t, bound, g.completed, batch, dc), batch.target_mask, mode);
          };
          record(testing::check_gradients(dparams, d_loss, kStep, kFloor), "D " + label);
          ++configs;
        }
      }
    }
  }
  const double elapsed = seconds_since(start);
  Verdict v;
  v.pass = worst < kRelative && worst_abs < kAbsolute && elapsed < 10.0;
  v.detail = std::to_string(configs) + " gradient checks, " + std::to_string(checked) + " entries (" +
             std::to_string(floored) + " under " + fixed(kFloor, 2) + "); worst relative " + fixed(worst, 3) +
             " at " + where + "; worst absolute below floor " + fixed(worst_abs, 3) + "; " + fixed(elapsed, 3) + " s";
  return v;
}

// 2 -----------------------------------------------------------------------------

double brute_force_backward(const Array& mask, const std::vector<double>& times, std::size_t i, std::size_t j) {
  const std::size_t n = times.size();
  if (i + 1 == n) return 0.0;
  std::size_t k = i + 1;
  while (k + 1 < n && mask(k, j) != 1.0) ++k;
  return times[k] - times[i];
}

Verdict delta_oracle() {
  const auto start = Clock::now();
  Rng rng(17);
  std::size_t mismatches = 0, cells = 0;
  for (int c = 0; c < 1000; ++c) {
    const std::size_t n = 1 + rng.below(30), d = 1 + rng.below(5);
    const double p = rng.uniform(0.05, 0.95);
    Array mask = Array::matrix(n, d);
    for (auto& m : mask.data()) m = rng.uniform() < p ? 1.0 : 0.0;
    std::vector<double> times(n);
    double now = static_cast<double>(rng.below(10));
    for (std::size_t i = 0; i < n; ++i) {
      times[i] = now;
      now += static_cast<double>(1 + rng.below(5));
    }
    const auto [fwd, bwd] = compute_deltas(mask, TimeGrid(times));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        ++cells;
        if (fwd(i, j) != testing::brute_force_delta(mask, times, i, j)) ++mismatches;
        if (bwd(i, j) != brute_force_backward(mask, times, i, j)) ++mismatches;
      }
    }
  }
  const double elapsed = seconds_since(start);
  Verdict v;
  v.pass = mismatches == 0 && elapsed < 5.0;
  v.detail = "1000 cases, " + std::to_string(cells) + " cells in each direction, " + std::to_string(mismatches) +
             " mismatches; " + fixed(elapsed, 3) + " s";
  return v;
}

// 3 -----------------------------------------------------------------------------

Verdict identities() {
  std::vector<std::string> failures;
  Rng rng(3);

  // Replacement with full and empty masks, directly and through the generator.
  for (int k = 0; k < 200; ++k) {
    Tape t;
    const std::size_t b = 1 + rng.below(4), n = 1 + rng.below(10);
    Array x = Array::matrix(b, n), est = Array::matrix(b, n);
    for (auto& v : x.data()) v = rng.normal();
    for (auto& v : est.data()) v = rng.normal();
    const Var e = t.constant(est);
    const Var full = replace_missing(e, x, Array::matrix(b, n, 1.0));
    if (full.value() != x) failures.push_back("m=1 replacement");
    const Var none = replace_missing(e, x, Array::matrix(b, n));
    if (none.value() != est) failures.push_back("m=0 replacement");
  }
  {
    const SeriesSample s = toy_sample(rng, 6, 3);
    SeriesSample observed = make_sample("all", s.values, Array::matrix(6, 3, 1.0), s.grid, 0);
    const Batch batch = Batch::from_samples(std::span<const SeriesSample>(&observed, 1));
    const GeneratorParams p = GeneratorParams::initialize(3, {}, rng);
    Tape t;
    const GeneratorGraph g = generate(t, t.bind_frozen(p.tensors), batch, {});
    const Array completed = g.completed.value();
    if (completed != batch.target_values) failures.push_back("generator output with m=1");
    const Var perfect = loss_reconstruction(t.constant(batch.target_values), batch.target_values, batch.target_mask);
    const double at_perfect = perfect.value()[0];
    if (at_perfect != 0.0) failures.push_back("loss_R at perfect reconstruction");
  }

  // The p = 0.5 critic.
  double worst_ln2 = 0.0;
  for (int k = 0; k < 100; ++k) {
    Tape t;
    const std::size_t b = 1 + rng.below(4), n = 2 + rng.below(10);
    Array m = Array::matrix(b, n);
    for (auto& v : m.data()) v = rng.uniform() < 0.5 ? 1.0 : 0.0;
    m(0, 0) = 1.0;
    m(0, 1) = 0.0;
    const Var half = t.constant(Array::matrix(b, n, 0.5));
    const Var loss = loss_discriminator(half, m, LossMode::vanilla);
    worst_ln2 = std::max(worst_ln2, std::fabs(loss.value()[0] - 2.0 * std::log(2.0)));
  }
  if (worst_ln2 > 1e-9) failures.push_back("loss_D at p=0.5");

  // gamma from random deltas and weights; lambda from the generator with
  // random combination weights.
  double lo = 1.0, hi = 0.0;
  std::size_t draws = 0;
  for (int k = 0; k < 10000; ++k) {
    Tape t;
    const std::size_t d = 1 + rng.below(5), H = 1 + rng.below(4);
    Array delta = Array::matrix(1, d), w = Array::matrix(H, d), bias = Array::vector(std::vector<double>(H));
    for (auto& v : delta.data()) v = rng.uniform(0.0, 50.0);
    for (auto& v : w.data()) v = rng.uniform(-3.0, 3.0);
    for (auto& v : bias.data()) v = rng.uniform(-3.0, 3.0);
    const Var gamma = decay(t.constant(delta), t.constant(w), t.constant(bias));
    for (double g : gamma.value().data()) {
      lo = std::min(lo, g);
      hi = std::max(hi, g);
      ++draws;
    }
  }
  for (int k = 0; k < 10000; ++k) {
    const std::size_t d = 1 + rng.below(3);
    GeneratorConfig gc;
    gc.hidden = 2;
    GeneratorParams p = GeneratorParams::initialize(d, gc, rng);
    for (const char* name : {"comb.W_lambda_f", "comb.W_lambda_b", "comb.b_lambda_f", "comb.b_lambda_b"}) {
      for (auto& v : p.at(name).data()) v = rng.uniform(-3.0, 3.0);
    }
    const SeriesSample s = toy_sample(rng, 2 + rng.below(4), d);
    const GeneratorOutput out = run_generator(p, s, gc);
    for (const auto* lambdas : {&out.lambda_fwd, &out.lambda_bwd}) {
      for (double l : *lambdas) {
        lo = std::min(lo, l);
        hi = std::max(hi, l);
        ++draws;
      }
    }
  }
  if (!(lo > 0.0 && hi <= 1.0)) failures.push_back("gamma/lambda range");

  Verdict v;
  v.pass = failures.empty();
  v.detail = "replacement, perfect loss_R, |loss_D - 2 ln 2| = " + fixed(worst_ln2, 3) + ", " +
             std::to_string(draws) + " gamma/lambda values in [" + fixed(lo, 6) + ", " + fixed(hi, 6) + "]";
  for (const auto& f : failures) v.detail += "; failed: " + f;
  return v;
}

// 4 -----------------------------------------------------------------------------

SeriesSample grid_sample(std::string id, const Array& values, const Array& observed) {
  std::vector<double> times(values.rows());
  for (std::size_t i = 0; i < times.size(); ++i) times[i] = static_cast<double>(i);
  return make_sample(std::move(id), values, observed, TimeGrid(times), 0);
}

Dataset plain_dataset(std::vector<SeriesSample> train, std::size_t d) {
  Dataset data;
  for (std::size_t j = 0; j < d; ++j) data.feature_names.push_back("f" + std::to_string(j));
  data.samples = std::move(train);
  data.splits.assign(data.samples.size(), Split::train);
  return data;
}

// Scores every other train sample that observes the cell, sorts by
// (distance, train order) and averages the first k.
std::vector<double> knn_exhaustive(const std::vector<SeriesSample>& train, const SeriesSample& q, std::size_t k,
                                   double fallback) {
  std::vector<double> out = q.target_values();
  for (std::size_t i = 0; i < q.steps(); ++i) {
    if (q.mask(i, 0) == 1.0) continue;
    std::vector<std::pair<double, std::size_t>> pool;
    for (std::size_t s = 0; s < train.size(); ++s) {
      if (train[s].id == q.id || train[s].mask(i, 0) != 1.0) continue;
      double sq = 0.0;
      std::size_t overlap = 0;
      for (std::size_t r = 0; r < q.steps(); ++r) {
        for (std::size_t j = 0; j < q.features(); ++j) {
          if (q.mask(r, j) == 1.0 && train[s].mask(r, j) == 1.0) {
            const double diff = q.values(r, j) - train[s].values(r, j);
            sq += diff * diff;
            ++overlap;
          }
        }
      }
      if (overlap > 0) pool.emplace_back(std::sqrt(sq / static_cast<double>(overlap)), s);
    }
    std::sort(pool.begin(), pool.end());
    if (pool.empty()) {
      out[i] = fallback;
      continue;
    }
    const std::size_t take = std::min(k, pool.size());
    double sum = 0.0;
    for (std::size_t c = 0; c < take; ++c) sum += train[pool[c].second].values(i, 0);
    out[i] = sum / static_cast<double>(take);
  }
  return out;
}

SeriesSample random_grid_sample(Rng& rng, std::string id, std::size_t n, std::size_t d, double p_observed) {
  Array values = Array::matrix(n, d), observed = Array::matrix(n, d);
  for (auto& v : values.data()) v = std::round(rng.uniform(-5.0, 5.0) * 4.0) / 4.0;
  for (auto& v : observed.data()) v = rng.uniform() < p_observed ? 1.0 : 0.0;
  return grid_sample(std::move(id), values, observed);
}

Verdict baseline_oracles() {
  std::vector<std::string> failures;
  Rng rng(77);

  std::size_t instances = 0, knn_mismatch = 0;
  while (instances < 50) {
    const std::size_t n = 3 + rng.below(6), d = 1 + rng.below(3), k = 1 + rng.below(4);
    std::vector<SeriesSample> train;
    for (std::size_t s = 0, count = 3 + rng.below(12); s < count; ++s) {
      train.push_back(random_grid_sample(rng, "t" + std::to_string(s), n, d, 0.7));
    }
    const Dataset data = plain_dataset(train, d);
    MeanImputer mean;
    try {
      mean.fit(data);
    } catch (const DataError&) {
      continue;
    }
    ++instances;
    KnnImputer knn(k);
    knn.fit(data);
    std::vector<SeriesSample> queries;
    for (int q = 0; q < 4; ++q) queries.push_back(random_grid_sample(rng, "q" + std::to_string(q), n, d, 0.6));
    queries.push_back(train.front());
    const auto out = knn.impute(queries);
    for (std::size_t q = 0; q < queries.size(); ++q) {
      if (out[q] != knn_exhaustive(train, queries[q], k, mean.mean())) ++knn_mismatch;
    }
  }
  if (knn_mismatch) failures.push_back("knn on " + std::to_string(knn_mismatch) + " queries");

  // y = 2x: target column is twice the covariate in every train row.
  double mice_error = 0.0;
  {
    std::vector<SeriesSample> train;
    for (int s = 0; s < 6; ++s) {
      Array values = Array::matrix(5, 2), observed = Array::matrix(5, 2, 1.0);
      for (std::size_t i = 0; i < 5; ++i) {
        values(i, 1) = static_cast<double>(s * 5 + static_cast<int>(i)) * 0.3 - 2.0;
        values(i, 0) = 2.0 * values(i, 1);
      }
      train.push_back(grid_sample("t" + std::to_string(s), values, observed));
    }
    MiceImputer mice(10);
    mice.fit(plain_dataset(train, 2));
    Array qv = Array::from_rows({{0, 1.5}, {0, -0.7}, {8.2, 4.1}, {0, 3.3}});
    Array qm = Array::from_rows({{0, 1}, {0, 1}, {1, 1}, {0, 1}});
    const SeriesSample q = grid_sample("q", qv, qm);
    const auto out = mice.impute(std::span<const SeriesSample>(&q, 1));
    for (std::size_t i = 0; i < 4; ++i) mice_error = std::max(mice_error, std::fabs(out[0][i] - 2.0 * qv(i, 1)));

    const Array table = Array::from_rows({{1, 2}, {2, 4}, {3, 0}, {4, 8}, {5, 10}});
    const Array seen = Array::from_rows({{1, 1}, {1, 1}, {1, 0}, {1, 1}, {1, 1}});
    mice_error = std::max(mice_error, std::fabs(MiceImputer::complete_table(table, seen, 10)(2, 1) - 6.0));
  }
  if (mice_error > 1e-6) failures.push_back("mice y=2x");

  // Mean imputer against the arithmetic mean of observed train targets.
  double mean_error = 0.0;
  {
    std::vector<SeriesSample> train;
    double sum = 0.0;
    std::size_t count = 0;
    for (int s = 0; s < 8; ++s) {
      SeriesSample t = random_grid_sample(rng, "t" + std::to_string(s), 6, 2, 0.6);
      for (std::size_t i = 0; i < 6; ++i) {
        if (t.mask(i, 0) == 1.0) {
          sum += t.values(i, 0);
          ++count;
        }
      }
      train.push_back(std::move(t));
    }
    Dataset data = plain_dataset(train, 2);
    const SeriesSample held = random_grid_sample(rng, "held", 6, 2, 0.9);
    data.samples.push_back(held);
    data.splits.push_back(Split::test);
    MeanImputer mean;
    mean.fit(data);
    const double expected = sum / static_cast<double>(count);
    const SeriesSample q = grid_sample("q", Array::matrix(3, 2), Array::matrix(3, 2));
    const auto filled = mean.impute(std::span<const SeriesSample>(&q, 1));
    for (double v : filled[0]) {
      mean_error = std::max(mean_error, std::fabs(v - expected));
    }
  }
  if (mean_error > 1e-12) failures.push_back("mean imputer");

  Verdict v;
  v.pass = failures.empty();
  v.detail = "knn exhaustive on " + std::to_string(instances) + " instances: " + std::to_string(knn_mismatch) +
             " mismatching queries; mice max |fill - 2x| = " + fixed(mice_error, 3) + "; mean max error " +
             fixed(mean_error, 3);
  for (const auto& f : failures) v.detail += "; failed: " + f;
  return v;
}

// 5-9 ---------------------------------------------------------------------------

constexpr std::uint64_t kDataSeed = 11;
constexpr std::uint64_t kEvalSeed = 42;

SyntheticOptions benchmark_shape() {
  SyntheticOptions o;
  o.samples = 500;
  o.steps = 20;
  o.features = 4;
  o.train = 350;
  o.validation = 50;
  o.target_missing = 0.2;
  o.seed = kDataSeed;
  return o;
}

ImputerSpec bigan_spec(const TrainConfig& config, const std::string& label) {
  return {label, [config, label] { return ImputerPtr(new BiganImputer(config, label)); }};
}

ImputerSpec mean_spec() {
  return {"mean", [] { return ImputerPtr(new MeanImputer()); }};
}

ExperimentOptions experiment(const TrainConfig& config) {
  ExperimentOptions o;
  o.seed = kEvalSeed;
  o.config_hash = config.hash();
  return o;
}

void save(const std::vector<EvalReport>& reports, const fs::path& dir) {
  fs::create_directories(dir);
  write_reports(reports, dir);
  std::ofstream(dir / "summary.csv", std::ios::binary) << summary_csv(reports);
}

const EvalReport& find(const std::vector<EvalReport>& reports, const std::string& imputer, const std::string& setting) {
  for (const auto& r : reports) {
    if (r.imputer == imputer && r.setting.label() == setting) return r;
  }
  throw std::runtime_error("no report for " + imputer + " " + setting);
}

std::string mae_text(const EvalReport& r) {
  return format_number(r.mean_mae) + (std::isnan(r.ci_half_width) ? "" : " +- " + format_number(r.ci_half_width));
}

Verdict synthetic_imputation(const fs::path& dir) {
  const auto start = Clock::now();
  const Dataset data = make_sinusoid_dataset(benchmark_shape());
  const TrainConfig config;
  const std::vector<ImputerSpec> specs = {bigan_spec(config, "bigan"), mean_spec()};
  const std::vector<Setting> settings = {Setting::imputation(0.1)};
  const auto reports = run_split(data, specs, settings, experiment(config));
  save(reports, dir);
  const double elapsed = seconds_since(start);
  const double bigan = find(reports, "bigan", "imputation-0.1").mean_mae;
  const double mean = find(reports, "mean", "imputation-0.1").mean_mae;
  Verdict v;
  v.pass = bigan <= 0.7 * mean && elapsed <= 300.0;
  v.detail = "test imputation MAE bigan " + format_number(bigan) + " vs mean " + format_number(mean) + " (ratio " +
             fixed(bigan / mean) + ", limit 0.7); " + fixed(elapsed, 4) + " s (limit 300)";
  return v;
}

struct PairedFolds {
  std::size_t wins = 0;
  std::size_t folds = 0;
  std::string text;
};

PairedFolds compare_folds(const EvalReport& a, const EvalReport& b) {
  PairedFolds out;
  for (std::size_t f = 0; f < a.folds.size() && f < b.folds.size(); ++f) {
    if (a.folds[f].skipped || b.folds[f].skipped) continue;
    ++out.folds;
    if (a.folds[f].mae < b.folds[f].mae) ++out.wins;
    out.text += (out.text.empty() ? "" : " ") + fixed(a.folds[f].mae) + "/" + fixed(b.folds[f].mae);
  }
  return out;
}

Verdict ablation_direction(const fs::path& dir, bool diagnostic) {
  const auto start = Clock::now();
  const Dataset data = make_sinusoid_dataset(benchmark_shape());
  TrainConfig full;
  TrainConfig plain;
  plain.no_lambda = true;
  const std::vector<Setting> settings = {Setting::prediction(4)};
  std::vector<EvalReport> reports;
  for (const auto& [config, label] : {std::pair{full, std::string("full")}, std::pair{plain, std::string("no_lambda")}}) {
    const ImputerSpec spec = bigan_spec(config, label);
    auto r = run_kfold(data, std::span<const ImputerSpec>(&spec, 1), settings, experiment(config));
    reports.insert(reports.end(), r.begin(), r.end());
  }
  save(reports, dir);
  const PairedFolds paired = compare_folds(reports[0], reports[1]);
  Verdict v;
  v.pass = paired.wins >= 4;
  v.detail = "full beats no_lambda in " + std::to_string(paired.wins) + " of " + std::to_string(paired.folds) +
             " folds (need 4); prediction-4 MAE full " + mae_text(reports[0]) + ", no_lambda " +
             mae_text(reports[1]) + "; per fold full/no_lambda: " + paired.text;
  if (diagnostic) {
    TrainConfig normalized;
    normalized.normalize_combination = true;
    const ImputerSpec spec = bigan_spec(normalized, "full_normalized");
    const auto r = run_kfold(data, std::span<const ImputerSpec>(&spec, 1), settings, experiment(normalized));
    save(r, dir.parent_path() / (dir.filename().string() + "_diagnostic"));
    const PairedFolds alt = compare_folds(r[0], reports[1]);
    v.detail += "; diagnostic: with lambda_f + lambda_b normalised to 1 the full model wins " +
                std::to_string(alt.wins) + " of " + std::to_string(alt.folds) + " (" + alt.text + ")";
  }
  v.detail += "; " + fixed(seconds_since(start), 4) + " s";
  return v;
}

Verdict window_direction(const fs::path& dir) {
  const auto start = Clock::now();
  SyntheticOptions o = benchmark_shape();
  o.covariate_missing = 0.2;
  const Dataset data = make_ar1_dataset(o);
  const TrainConfig config;
  const std::vector<ImputerSpec> specs = {bigan_spec(config, "bigan")};
  const std::vector<Setting> settings = {Setting::prediction(4), Setting::prediction(10)};
  const auto reports = run_split(data, specs, settings, experiment(config));
  save(reports, dir);
  const double at4 = find(reports, "bigan", "prediction-4").mean_mae;
  const double at10 = find(reports, "bigan", "prediction-10").mean_mae;
  Verdict v;
  v.pass = at10 < at4;
  v.detail = "AR(1) prediction MAE obs=4 " + format_number(at4) + ", obs=10 " + format_number(at10) + "; " +
             fixed(seconds_since(start), 4) + " s";
  return v;
}

std::vector<EvalReport> air_quality_reports(const Dataset& data) {
  const TrainConfig config;
  const std::vector<ImputerSpec> specs = {bigan_spec(config, "bigan"), mean_spec()};
  const std::vector<Setting> settings = {Setting::imputation(0.1), Setting::prediction(4)};
  auto reports = run_split(data, specs, settings, experiment(config));
  for (auto& r : reports) {
    if (r.imputer == "bigan" && r.setting.kind == SettingKind::imputation) {
      r.notes.push_back("published reference for this setting: MAE 1.12 (95% CI 0.24), non-binding");
    }
  }
  return reports;
}

const char* kAirQualityVariable = "BIGAN_AIR_QUALITY_CSV";

Verdict air_quality(const fs::path& dir) {
  const char* path = std::getenv(kAirQualityVariable);
  if (!path || !fs::exists(path)) {
    return {false, std::string("not evaluated: set ") + kAirQualityVariable +
                       " to the UCI AirQualityUCI.csv file (no copy is available offline); reference MAE 1.12 "
                       "(95% CI 0.24)"};
  }
  const auto start = Clock::now();
  const Dataset data = load_air_quality_csv(path);
  const auto reports = air_quality_reports(data);
  save(reports, dir);
  const double elapsed = seconds_since(start);
  const EvalReport& bigan = find(reports, "bigan", "imputation-0.1");
  const EvalReport& mean = find(reports, "mean", "imputation-0.1");
  Verdict v;
  v.pass = bigan.mean_mae < mean.mean_mae && elapsed <= 1800.0;
  v.detail = "imputation-0.1 MAE bigan " + mae_text(bigan) + " vs mean " + mae_text(mean) + " (reference 1.12, CI 0.24)" +
             "; prediction-4 bigan " + mae_text(find(reports, "bigan", "prediction-4")) + ", mean " +
             mae_text(find(reports, "mean", "prediction-4")) + "; " + fixed(elapsed, 4) + " s (limit 1800)";
  return v;
}

// A stand-in file in the same layout, so the ingest and split path is rerun
// even when the real data is absent.
Verdict air_quality_lookalike(const fs::path& dir) {
  fs::create_directories(dir);
  const fs::path file = dir / "air_quality_like.csv";
  {
    std::ofstream out(file, std::ios::binary);
    write_air_quality_like_csv(out, {"2004-03", "2004-04", "2004-05", "2004-06", "2004-07"}, 0.15, 5);
  }
  save(air_quality_reports(load_air_quality_csv(file)), dir);
  return {true, ""};
}

std::vector<std::string> differing_files(const fs::path& a, const fs::path& b, std::size_t& compared) {
  std::vector<std::string> out;
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  std::vector<fs::path> names;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) names.push_back(fs::relative(e.path(), a));
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (e.is_regular_file() && !fs::exists(a / fs::relative(e.path(), b))) out.push_back(fs::relative(e.path(), b).string());
  }
  for (const auto& n : names) {
    ++compared;
    if (!fs::exists(b / n) || slurp(a / n) != slurp(b / n)) out.push_back(n.string());
  }
  return out;
}

Verdict determinism(const fs::path& work) {
  const auto start = Clock::now();
  const bool real_air = std::getenv(kAirQualityVariable) && fs::exists(std::getenv(kAirQualityVariable));
  struct Run {
    std::string name;
    std::function<Verdict(const fs::path&)> run;
  };
  const std::vector<Run> runs = {
      {"criterion5", synthetic_imputation},
      {"criterion6", [](const fs::path& d) { return ablation_direction(d, false); }},
      {"criterion7", window_direction},
      {real_air ? "criterion8" : "criterion8_lookalike",
       real_air ? std::function<Verdict(const fs::path&)>(air_quality) : air_quality_lookalike},
  };
  std::size_t compared = 0;
  std::vector<std::string> differences;
  for (const auto& r : runs) {
    const fs::path first = work / r.name;
    const fs::path again = work / "rerun" / r.name;
    if (!fs::exists(first / "summary.csv")) {
      fs::remove_all(first);
      r.run(first);
    }
    fs::remove_all(again);
    r.run(again);
    for (const auto& f : differing_files(first, again, compared)) differences.push_back(r.name + "/" + f);
  }
  Verdict v;
  v.pass = differences.empty() && compared > 0;
  v.detail = std::to_string(compared) + " report files compared across reruns of criteria 5, 6, 7 and " +
             (real_air ? "8" : "the air-quality pipeline on a look-alike file (real data absent)") + "; " +
             std::to_string(differences.size()) + " differ; " + fixed(seconds_since(start), 4) + " s";
  for (const auto& d : differences) v.detail += "; differs: " + d;
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int criterion = 0;
  std::string work = "acceptance_work";
  bool diagnostics = true;
  app.add_option("--criterion", criterion, "criterion number, 1 to 9")->required()->check(CLI::Range(1, 9));
  app.add_option("--work", work, "directory for reports")->capture_default_str();
  app.add_flag("!--no-diagnostics", diagnostics, "skip diagnostic side runs");
  CLI11_PARSE(app, argc, argv);

  const fs::path dir = work;
  fs::create_directories(dir);
  Verdict v;
  try {
    switch (criterion) {
      case 1: v = gradient_integrity(); break;
      case 2: v = delta_oracle(); break;
      case 3: v = identities(); break;
      case 4: v = baseline_oracles(); break;
      case 5: v = synthetic_imputation(dir / "criterion5"); break;
      case 6: v = ablation_direction(dir / "criterion6", diagnostics); break;
      case 7: v = window_direction(dir / "criterion7"); break;
      case 8: v = air_quality(dir / "criterion8"); break;
      case 9: v = determinism(dir); break;
    }
  } catch (const std::exception& e) {
    v = {false, std::string("error: ") + e.what()};
  }
  std::cout << "criterion " << criterion << ": " << (v.pass ? "PASS" : "FAIL") << " " << v.detail << std::endl;
  return v.pass ? 0 : 1;
}
