// SPDX-License-Identifier: Apache-2.0
#include "bigan/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "bigan/evaluation.hpp"
#include "bigan/rng.hpp"

namespace bigan {

namespace {

// Fills an n x d value matrix for one sample.
using SampleFn = std::function<Array(Rng&, std::size_t steps, std::size_t features)>;

Dataset build(const SyntheticOptions& o, const SampleFn& fn) {
  if (o.samples == 0 || o.steps < 2 || o.features == 0) throw std::invalid_argument("synthetic: empty shape");
  if (o.train + o.validation > o.samples) throw std::invalid_argument("synthetic: split sizes exceed sample count");
  if (o.min_length > o.steps) throw std::invalid_argument("synthetic: min_length exceeds steps");
  Rng rng(o.seed);
  std::vector<SeriesSample> raw;
  for (std::size_t k = 0; k < o.samples; ++k) {
    std::size_t length = o.steps;
    if (o.min_length > 0 && o.min_length < o.steps) length = o.min_length + rng.below(o.steps - o.min_length + 1);
    const Array full = fn(rng, o.steps, o.features);
    Array values = Array::matrix(length, o.features), observed = Array::matrix(length, o.features, 1.0);
    for (std::size_t i = 0; i < length; ++i)
      for (std::size_t j = 0; j < o.features; ++j) {
        values(i, j) = full(i, j);
        const double rate = j == 0 ? o.target_missing : o.covariate_missing;
        if (rate > 0.0 && rng.uniform() < rate) observed(i, j) = 0.0;
      }
    std::vector<double> times(length);
    for (std::size_t i = 0; i < length; ++i) times[i] = static_cast<double>(i);
    char id[32];
    std::snprintf(id, sizeof(id), "s%04zu", k);
    raw.push_back(make_sample(id, values, observed, TimeGrid(std::move(times)), 0));
  }
  Dataset data = pad_and_align(std::move(raw), o.steps);
  for (std::size_t j = 0; j < o.features; ++j) data.feature_names.push_back("f" + std::to_string(j));
  data.target = 0;
  for (std::size_t k = 0; k < o.samples; ++k)
    data.splits[k] = k < o.train ? Split::train : k < o.train + o.validation ? Split::validation : Split::test;
  return o.normalize ? normalize(std::move(data)) : data;
}

}  // namespace

Dataset make_sinusoid_dataset(const SyntheticOptions& options) {
  return build(options, [&](Rng& rng, std::size_t n, std::size_t d) {
    const double w = rng.uniform(0.3, 0.8), phi = rng.uniform(0.0, 2.0 * std::numbers::pi), amp = rng.uniform(0.5, 1.5);
    Array out = Array::matrix(n, d);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j)
        out(i, j) = amp * std::sin(w * static_cast<double>(i) + phi + static_cast<double>(j) * std::numbers::pi / 4.0) +
                    options.noise * rng.normal();
    return out;
  });
}

Dataset make_ar1_dataset(const SyntheticOptions& options, double phi, double coupling) {
  if (!(std::fabs(phi) < 1.0) || !(std::fabs(coupling) <= 1.0)) throw std::invalid_argument("ar1: |phi| < 1 and |coupling| <= 1");
  return build(options, [&, phi, coupling](Rng& rng, std::size_t n, std::size_t d) {
    const double innovation = std::sqrt(1.0 - phi * phi), rest = std::sqrt(1.0 - coupling * coupling);
    std::vector<double> state(d);
    for (auto& s : state) s = rng.normal();
    Array out = Array::matrix(n, d);
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0)
        for (auto& s : state) s = phi * s + innovation * rng.normal();
      for (std::size_t j = 0; j < d; ++j) {
        const double signal = j == 0 ? state[0] : coupling * state[0] + rest * state[j];
        out(i, j) = signal + options.noise * rng.normal();
      }
    }
    return out;
  });
}

Dataset make_stationary_dataset(const SyntheticOptions& options) {
  return build(options, [](Rng& rng, std::size_t n, std::size_t d) {
    Array out = Array::matrix(n, d);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = 5.0 + 2.0 * rng.normal();
    return out;
  });
}

void write_long_csv(const Dataset& data, std::ostream& out) {
  out << "sample_id,time,feature,value,split\n";
  for (std::size_t k = 0; k < data.size(); ++k) {
    const SeriesSample& s = data.samples[k];
    for (std::size_t i = 0; i < s.steps(); ++i)
      for (std::size_t j = 0; j < s.features(); ++j) {
        if (s.mask(i, j) != 1.0) continue;
        const double v = data.normalized ? data.norm.denormalize(j, s.values(i, j)) : s.values(i, j);
        out << s.id << ',' << format_number(s.grid[i]) << ',' << data.feature_names[j] << ',' << format_number(v) << ','
            << split_name(data.splits[k]) << '\n';
      }
  }
}

void write_air_quality_like_csv(std::ostream& out, const std::vector<std::string>& months, double missing,
                                std::uint64_t seed) {
  static const char* kColumns[] = {"CO(GT)",     "PT08.S1(CO)", "NMHC(GT)", "C6H6(GT)", "PT08.S2(NMHC)",
                                   "NOx(GT)",    "PT08.S3(NOx)", "NO2(GT)", "PT08.S4(NO2)", "PT08.S5(O3)",
                                   "T",          "RH",          "AH"};
  static const double kScale[] = {1.5, 200, 150, 7, 250, 200, 250, 40, 300, 350, 8, 15, 0.3};
  static const double kLevel[] = {2.0, 1100, 250, 10, 950, 250, 850, 110, 1450, 1000, 18, 49, 1.0};
  Rng rng(seed);
  out << "Date;Time";
  for (const char* c : kColumns) out << ';' << c;
  out << ";;\n";
  const int days_in[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  double load = 0.0;
  for (const auto& month : months) {
    int year = 0, mon = 0;
    if (std::sscanf(month.c_str(), "%d-%d", &year, &mon) != 2 || mon < 1 || mon > 12) {
      throw std::invalid_argument("month must be yyyy-mm: " + month);
    }
    const int days = days_in[mon - 1] + (mon == 2 && year % 4 == 0 ? 1 : 0);
    for (int day = 1; day <= days; ++day)
      for (int hour = 0; hour < 24; ++hour) {
        load = 0.8 * load + 0.6 * rng.normal();
        const double daily = std::sin(2.0 * std::numbers::pi * (hour - 8) / 24.0);
        char stamp[40];
        std::snprintf(stamp, sizeof(stamp), "%02d/%02d/%04d;%02d.00.00", day, mon, year, hour);
        out << stamp;
        for (std::size_t j = 0; j < 13; ++j) {
          if (rng.uniform() < missing) {
            out << ";-200";
            continue;
          }
          const double z = (j < 10 ? 0.7 * load + 0.5 * daily : 0.8 * daily) + 0.3 * rng.normal();
          std::string text = format_number(std::round((kLevel[j] + kScale[j] * z) * 10.0) / 10.0);
          for (auto& c : text)
            if (c == '.') c = ',';
          out << ';' << text;
        }
        out << ";;\n";
      }
  }
}

}  // namespace bigan
