// SPDX-License-Identifier: Apache-2.0
#include "bigan/corruption.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "bigan/errors.hpp"
#include "bigan/rng.hpp"

namespace bigan {

std::string Setting::label() const {
  if (kind == SettingKind::prediction) return "prediction-" + std::to_string(observation_length);
  std::ostringstream ss;
  ss << "imputation-" << rate;
  return ss.str();
}

std::size_t CorruptionPlan::eval_count() const {
  std::size_t c = 0;
  for (double v : eval_mask) c += v == 1.0;
  return c;
}

CorruptionPlan corrupt_steps(const SeriesSample& sample, const Setting& setting, std::uint64_t seed,
                             const std::vector<std::size_t>& steps) {
  CorruptionPlan plan;
  plan.setting = setting;
  plan.seed = seed;
  plan.truth = sample.target_values();
  plan.eval_mask.assign(sample.steps(), 0.0);
  plan.corrupted = sample;
  const std::size_t t = sample.target;
  for (std::size_t i : steps) {
    if (i >= sample.steps() || sample.mask(i, t) != 1.0) {
      throw std::invalid_argument("corruption: step " + std::to_string(i) + " of sample '" + sample.id +
                                  "' is not an observed target cell");
    }
    plan.eval_mask[i] = 1.0;
    plan.corrupted.mask(i, t) = 0.0;
    plan.corrupted.values(i, t) = 0.0;
  }
  if (!steps.empty()) plan.corrupted.refresh_deltas();
  return plan;
}

CorruptionPlan corrupt_imputation(const SeriesSample& sample, double rate, std::uint64_t seed) {
  if (!(rate > 0.0 && rate < 1.0)) throw std::invalid_argument("corrupt_imputation: rate must lie in (0, 1)");
  std::vector<std::size_t> observed;
  for (std::size_t i = 0; i < sample.steps(); ++i)
    if (sample.mask(i, sample.target) == 1.0) observed.push_back(i);
  if (observed.empty()) {
    throw std::invalid_argument("corrupt_imputation: sample '" + sample.id + "' has no observed target cell");
  }
  const auto count = static_cast<std::size_t>(std::floor(rate * static_cast<double>(observed.size()) + 0.5));
  if (count >= observed.size()) {
    throw std::invalid_argument("corrupt_imputation: rate " + std::to_string(rate) + " would delete all " +
                                std::to_string(observed.size()) + " observed target cells of '" + sample.id + "'");
  }
  // Partial Fisher-Yates: the first `count` slots are a uniform draw without replacement.
  Rng rng(seed);
  for (std::size_t k = 0; k < count; ++k) std::swap(observed[k], observed[k + rng.below(observed.size() - k)]);
  std::vector<std::size_t> chosen(observed.begin(), observed.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(chosen.begin(), chosen.end());
  return corrupt_steps(sample, Setting::imputation(rate), seed, chosen);
}

CorruptionPlan corrupt_prediction(const SeriesSample& sample, std::size_t observation_length) {
  if (observation_length == 0 || observation_length >= sample.steps()) {
    throw std::invalid_argument("corrupt_prediction: observation length must lie in (0, " +
                                std::to_string(sample.steps()) + ")");
  }
  std::vector<std::size_t> chosen;
  for (std::size_t i = observation_length; i < sample.steps(); ++i)
    if (sample.mask(i, sample.target) == 1.0) chosen.push_back(i);
  CorruptionPlan plan = corrupt_steps(sample, Setting::prediction(observation_length), 0, chosen);
  plan.empty_window = chosen.empty();
  return plan;
}

CorruptionPlan corrupt(const SeriesSample& sample, const Setting& setting, std::uint64_t seed) {
  if (setting.kind == SettingKind::prediction) return corrupt_prediction(sample, setting.observation_length);
  return corrupt_imputation(sample, setting.rate, seed);
}

void write_plans(std::ostream& out, const std::vector<CorruptionPlan>& plans) {
  out << "# sample_id\tsetting\tparameter\tseed\tdeleted(step:feature)\n";
  for (const auto& p : plans) {
    out << p.corrupted.id << '\t'
        << (p.setting.kind == SettingKind::imputation ? "imputation" : "prediction") << '\t';
    if (p.setting.kind == SettingKind::imputation) {
      char buf[32];
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), p.setting.rate);
      out.write(buf, end - buf);
    } else {
      out << p.setting.observation_length;
    }
    out << '\t' << p.seed << '\t';
    bool first = true;
    for (std::size_t i = 0; i < p.eval_mask.size(); ++i) {
      if (p.eval_mask[i] != 1.0) continue;
      if (!first) out << ',';
      out << i << ':' << p.corrupted.target;
      first = false;
    }
    if (first) out << '-';
    out << '\n';
  }
}

std::vector<PlanRecord> read_plans(std::istream& in) {
  std::vector<PlanRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::istringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) f.push_back(field);
    if (f.size() != 5) throw DataError("plan line " + std::to_string(line_no) + ": expected 5 fields");
    PlanRecord r;
    r.sample_id = f[0];
    try {
      if (f[1] == "imputation") {
        r.setting = Setting::imputation(std::stod(f[2]));
      } else if (f[1] == "prediction") {
        r.setting = Setting::prediction(std::stoul(f[2]));
      } else {
        throw DataError("unknown setting '" + f[1] + "'");
      }
      r.seed = std::stoull(f[3]);
      if (f[4] != "-") {
        std::istringstream cells(f[4]);
        std::string cell;
        while (std::getline(cells, cell, ',')) {
          const auto colon = cell.find(':');
          if (colon == std::string::npos) throw DataError("bad cell '" + cell + "'");
          r.steps.push_back(std::stoul(cell.substr(0, colon)));
          r.feature = std::stoul(cell.substr(colon + 1));
        }
      }
    } catch (const std::logic_error& e) {
      throw DataError("plan line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace bigan
