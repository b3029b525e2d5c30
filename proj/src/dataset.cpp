// SPDX-License-Identifier: Apache-2.0
#include "bigan/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "bigan/errors.hpp"
#include "bigan/tensor_io.hpp"

namespace bigan {

// TimeGrid ---------------------------------------------------------------------

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
  if (times_.empty()) throw std::invalid_argument("TimeGrid: no time points");
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (!(times_[i] > times_[i - 1])) {
      throw std::invalid_argument("TimeGrid: times not strictly increasing at index " + std::to_string(i));
    }
  }
}

TimeGrid TimeGrid::reversed() const {
  std::vector<double> out(times_.size());
  const double last = times_.back();
  for (std::size_t k = 0; k < times_.size(); ++k) out[k] = last - times_[times_.size() - 1 - k];
  return TimeGrid(std::move(out));
}

// Deltas -------------------------------------------------------------------------

Array compute_delta_forward(const Array& mask, const TimeGrid& grid) {
  const std::size_t n = mask.rows(), d = mask.cols();
  if (grid.size() != n) {
    throw std::invalid_argument("compute_deltas: mask has " + std::to_string(n) + " rows but grid has " +
                                std::to_string(grid.size()) + " points");
  }
  Array delta = Array::matrix(n, d);
  for (std::size_t i = 1; i < n; ++i) {
    const double gap = grid[i] - grid[i - 1];
    for (std::size_t j = 0; j < d; ++j) {
      delta(i, j) = mask(i - 1, j) == 1.0 ? gap : delta(i - 1, j) + gap;
    }
  }
  return delta;
}

Array reverse_rows(const Array& m) {
  const std::size_t n = m.rows(), d = m.cols();
  Array out(m.shape());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = m[(n - 1 - i) * d + j];
  return out;
}

std::pair<Array, Array> compute_deltas(const Array& mask, const TimeGrid& grid) {
  Array fwd = compute_delta_forward(mask, grid);
  Array bwd = reverse_rows(compute_delta_forward(reverse_rows(mask), grid.reversed()));
  return {std::move(fwd), std::move(bwd)};
}

// SeriesSample -----------------------------------------------------------------

std::vector<double> SeriesSample::target_values() const {
  std::vector<double> out(steps());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = values(i, target);
  return out;
}

std::vector<double> SeriesSample::target_mask() const {
  std::vector<double> out(steps());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mask(i, target);
  return out;
}

std::size_t SeriesSample::observed_target_count() const {
  std::size_t c = 0;
  for (std::size_t i = 0; i < steps(); ++i) c += mask(i, target) == 1.0;
  return c;
}

void SeriesSample::refresh_deltas() {
  auto [fwd, bwd] = compute_deltas(mask, grid);
  delta_fwd = std::move(fwd);
  delta_bwd = std::move(bwd);
}

SeriesSample make_sample(std::string id, const Array& values, const Array& observed, TimeGrid grid,
                         std::size_t target) {
  if (values.shape() != observed.shape()) throw ShapeError("make_sample", values.shape(), observed.shape());
  if (target >= values.cols()) throw std::invalid_argument("make_sample: target index out of range");
  SeriesSample s;
  s.id = std::move(id);
  s.values = Array::matrix(values.rows(), values.cols());
  s.mask = Array::matrix(values.rows(), values.cols());
  for (std::size_t k = 0; k < values.size(); ++k) {
    const bool present = observed[k] != 0.0;
    s.mask[k] = present ? 1.0 : 0.0;
    s.values[k] = present ? values[k] : 0.0;
  }
  s.grid = std::move(grid);
  s.target = target;
  s.native_length = values.rows();
  s.refresh_deltas();
  return s;
}

// Dataset ------------------------------------------------------------------------

std::string_view split_name(Split s) {
  switch (s) {
    case Split::train:
      return "train";
    case Split::validation:
      return "validation";
    case Split::test:
      return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "validation" || name == "val") return Split::validation;
  if (name == "test") return Split::test;
  throw DataError("unknown split label '" + std::string(name) + "'");
}

std::vector<std::size_t> Dataset::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < splits.size(); ++i)
    if (splits[i] == s) out.push_back(i);
  return out;
}

bool Dataset::has_split(Split s) const { return std::find(splits.begin(), splits.end(), s) != splits.end(); }

Dataset Dataset::subset(std::span<const std::size_t> which) const {
  Dataset out;
  out.feature_names = feature_names;
  out.target = target;
  out.norm = norm;
  out.normalized = normalized;
  out.dropped_features = dropped_features;
  out.notes = notes;
  for (std::size_t i : which) {
    out.samples.push_back(samples.at(i));
    out.splits.push_back(splits.at(i));
    out.groups.push_back(groups.at(i));
  }
  return out;
}

double Dataset::denormalize_target(double z) const { return normalized ? norm.denormalize(target, z) : z; }
double Dataset::normalize_target(double v) const { return normalized ? norm.normalize(target, v) : v; }

void Dataset::validate() const {
  if (splits.size() != samples.size() || groups.size() != samples.size()) {
    throw std::invalid_argument("dataset: split/group labels do not cover every sample");
  }
  if (target >= feature_names.size()) throw std::invalid_argument("dataset: target index out of range");
  const std::size_t n = steps(), d = features();
  if (!samples.empty() && n < 2) throw std::invalid_argument("dataset: series need at least 2 time steps");
  for (const auto& s : samples) {
    if (s.steps() != n || s.features() != d) {
      throw std::invalid_argument("dataset: sample '" + s.id + "' has shape " + shape_string(s.values.shape()) +
                                  ", expected [" + std::to_string(n) + "," + std::to_string(d) + "]");
    }
    if (s.target != target) throw std::invalid_argument("dataset: sample '" + s.id + "' has a different target");
  }
}

// Padding --------------------------------------------------------------------------

Dataset pad_and_align(std::vector<SeriesSample> raw, std::size_t length) {
  Dataset out;
  for (auto& s : raw) {
    const std::size_t rows = s.steps(), d = s.features();
    if (rows > length) {
      throw DataError("sample '" + s.id + "' has " + std::to_string(rows) + " steps, longer than the aligned length " +
                      std::to_string(length));
    }
    if (rows < length) {
      Array values = Array::matrix(length, d), mask = Array::matrix(length, d);
      std::copy(s.values.data().begin(), s.values.data().end(), values.data().begin());
      std::copy(s.mask.data().begin(), s.mask.data().end(), mask.data().begin());
      std::vector<double> times = s.grid.times();
      const double step = times.size() >= 2 ? times.back() - times[times.size() - 2] : 1.0;
      while (times.size() < length) times.push_back(times.back() + step);
      s.values = std::move(values);
      s.mask = std::move(mask);
      s.grid = TimeGrid(std::move(times));
    }
    s.native_length = std::min(s.native_length == 0 ? rows : s.native_length, rows);
    s.refresh_deltas();
    out.samples.push_back(std::move(s));
    out.splits.push_back(Split::train);
    out.groups.emplace_back();
  }
  return out;
}

// Normalisation ------------------------------------------------------------------

namespace {

// Keeps the listed columns of an n x d matrix.
Array select_columns(const Array& m, const std::vector<std::size_t>& keep) {
  Array out = Array::matrix(m.rows(), keep.size());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t k = 0; k < keep.size(); ++k) out(i, k) = m(i, keep[k]);
  return out;
}

}  // namespace

Dataset normalize(Dataset raw) {
  if (raw.normalized) throw std::invalid_argument("normalize: dataset is already normalised");
  const std::size_t d = raw.features();
  std::vector<double> sum(d, 0.0), count(d, 0.0);
  bool any_train = false;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    if (raw.splits[k] != Split::train) continue;
    any_train = true;
    const auto& s = raw.samples[k];
    for (std::size_t i = 0; i < s.steps(); ++i)
      for (std::size_t j = 0; j < d; ++j)
        if (s.mask(i, j) == 1.0) {
          sum[j] += s.values(i, j);
          count[j] += 1.0;
        }
  }
  if (!any_train) throw DataError("normalize: no train-split samples to fit statistics on");
  std::vector<double> mean(d, 0.0), var(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) mean[j] = count[j] > 0 ? sum[j] / count[j] : 0.0;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    if (raw.splits[k] != Split::train) continue;
    const auto& s = raw.samples[k];
    for (std::size_t i = 0; i < s.steps(); ++i)
      for (std::size_t j = 0; j < d; ++j)
        if (s.mask(i, j) == 1.0) var[j] += (s.values(i, j) - mean[j]) * (s.values(i, j) - mean[j]);
  }

  std::vector<std::size_t> keep;
  NormStats stats;
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = count[j] > 1 ? std::sqrt(var[j] / count[j]) : 0.0;
    if (sd > 0.0 && std::isfinite(sd)) {
      keep.push_back(j);
      stats.mean.push_back(mean[j]);
      stats.stddev.push_back(sd);
    } else {
      raw.dropped_features.push_back(raw.feature_names[j]);
      raw.notes.push_back("dropped feature '" + raw.feature_names[j] + "': zero or undefined train-split variance");
    }
  }
  const auto target_it = std::find(keep.begin(), keep.end(), raw.target);
  if (target_it == keep.end()) {
    throw DataError("target feature '" + raw.feature_names[raw.target] + "' has zero train-split variance");
  }
  const std::size_t new_target = static_cast<std::size_t>(target_it - keep.begin());

  const bool dropping = keep.size() != d;
  for (auto& s : raw.samples) {
    if (dropping) {
      s.values = select_columns(s.values, keep);
      s.mask = select_columns(s.mask, keep);
      s.delta_fwd = select_columns(s.delta_fwd, keep);
      s.delta_bwd = select_columns(s.delta_bwd, keep);
    }
    s.target = new_target;
    for (std::size_t i = 0; i < s.steps(); ++i)
      for (std::size_t k = 0; k < keep.size(); ++k)
        s.values(i, k) = s.mask(i, k) == 1.0 ? stats.normalize(k, s.values(i, k)) : 0.0;
  }
  std::vector<std::string> names;
  for (std::size_t j : keep) names.push_back(raw.feature_names[j]);
  raw.feature_names = std::move(names);
  raw.target = new_target;
  raw.norm = std::move(stats);
  raw.normalized = true;
  return raw;
}

Dataset denormalize(Dataset data) {
  if (!data.normalized) return data;
  for (auto& s : data.samples)
    for (std::size_t i = 0; i < s.steps(); ++i)
      for (std::size_t j = 0; j < s.features(); ++j)
        if (s.mask(i, j) == 1.0) s.values(i, j) = data.norm.denormalize(j, s.values(i, j));
  data.norm = NormStats{};
  data.normalized = false;
  return data;
}

double missing_fraction(const Dataset& data, std::optional<std::size_t> feature) {
  double missing = 0.0, total = 0.0;
  for (const auto& s : data.samples) {
    const std::size_t rows = std::min(s.native_length, s.steps());
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < s.features(); ++j) {
        if (feature && j != *feature) continue;
        total += 1.0;
        missing += s.mask(i, j) == 0.0;
      }
  }
  return total > 0 ? missing / total : 0.0;
}

// CSV helpers -----------------------------------------------------------------------

namespace {

std::vector<std::string> split_line(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::optional<double> parse_number(std::string text, bool decimal_comma) {
  text = trim(std::move(text));
  if (decimal_comma) std::replace(text.begin(), text.end(), ',', '.');
  if (text.empty()) return std::nullopt;
  const char* first = text.data();
  if (*first == '+') ++first;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string location(std::size_t line) { return "line " + std::to_string(line); }

// Days since 1970-01-01 for a proleptic Gregorian date (Howard Hinnant's algorithm).
long long days_from_civil(long long y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long long>(doe) - 719468;
}

struct AirRow {
  std::string month;  // yyyy-mm
  std::string stamp;  // yyyy-mm-ddTHH:MM
  double hours = 0.0;
  std::vector<double> values;
  std::vector<double> observed;
};

int parse_int(const std::string& s, std::size_t line, const char* what) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError(location(line) + ": cannot parse " + what + " '" + s + "'");
  }
  return v;
}

}  // namespace

// Air quality -----------------------------------------------------------------------

Dataset parse_air_quality(std::istream& in, const AirQualityOptions& options) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    header = split_line(line, ';');
    while (!header.empty() && trim(header.back()).empty()) header.pop_back();
  }
  if (header.empty()) throw DataError("no samples: air-quality file is empty");
  if (header.size() < 3 || trim(header[0]) != "Date" || trim(header[1]) != "Time") {
    throw DataError(location(line_no) + ": expected header starting with Date;Time");
  }
  std::vector<std::string> names;
  for (std::size_t k = 2; k < header.size(); ++k) names.push_back(trim(header[k]));
  const auto target_it = std::find(names.begin(), names.end(), options.target);
  if (target_it == names.end()) throw DataError("target column '" + options.target + "' not found in header");
  const std::size_t d = names.size();

  std::vector<AirRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_line(line, ';');
    while (!fields.empty() && trim(fields.back()).empty()) fields.pop_back();
    if (fields.empty()) continue;  // trailing ";;;;" filler rows
    if (fields.size() != header.size()) {
      throw DataError(location(line_no) + ": expected " + std::to_string(header.size()) + " columns, found " +
                      std::to_string(fields.size()));
    }
    const auto date = split_line(trim(fields[0]), '/');
    const auto clock = split_line(trim(fields[1]), '.');
    if (date.size() != 3 || clock.size() < 2) {
      throw DataError(location(line_no) + ": cannot parse date/time '" + fields[0] + " " + fields[1] + "'");
    }
    const int day = parse_int(date[0], line_no, "day"), month = parse_int(date[1], line_no, "month");
    const int year = parse_int(date[2], line_no, "year"), hour = parse_int(clock[0], line_no, "hour");
    if (month < 1 || month > 12 || day < 1 || day > 31 || hour < 0 || hour > 23) {
      throw DataError(location(line_no) + ": date/time out of range");
    }
    AirRow row;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
    row.month = buf;
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:00", year, month, day, hour);
    row.stamp = buf;
    row.hours = static_cast<double>(days_from_civil(year, month, day) * 24 + hour);
    row.values.resize(d);
    row.observed.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      const auto v = parse_number(fields[j + 2], true);
      if (!v) throw DataError(location(line_no) + ": cannot parse number '" + fields[j + 2] + "' in column " + names[j]);
      row.observed[j] = *v == -200.0 ? 0.0 : 1.0;
      row.values[j] = *v == -200.0 ? 0.0 : *v;
    }
    rows.push_back(std::move(row));
  }

  Dataset out;
  out.feature_names = names;
  out.target = static_cast<std::size_t>(target_it - names.begin());
  std::size_t dropped_rows = 0, dropped_windows = 0;
  std::size_t start = 0;
  while (start < rows.size()) {
    std::size_t end = start;
    while (end < rows.size() && rows[end].month == rows[start].month) ++end;
    const std::string& month = rows[start].month;
    Split split = Split::train;
    if (std::find(options.test_months.begin(), options.test_months.end(), month) != options.test_months.end()) {
      split = Split::test;
    } else if (std::find(options.validation_months.begin(), options.validation_months.end(), month) !=
               options.validation_months.end()) {
      split = Split::validation;
    }
    std::size_t w = start;
    for (; w + options.window <= end; w += options.window) {
      Array values = Array::matrix(options.window, d), observed = Array::matrix(options.window, d);
      std::vector<double> times(options.window);
      for (std::size_t i = 0; i < options.window; ++i) {
        const AirRow& r = rows[w + i];
        times[i] = r.hours;
        for (std::size_t j = 0; j < d; ++j) {
          values(i, j) = r.values[j];
          observed(i, j) = r.observed[j];
        }
      }
      TimeGrid grid;
      try {
        grid = TimeGrid(std::move(times));
      } catch (const std::invalid_argument& e) {
        throw DataError("window starting " + rows[w].stamp + ": " + e.what());
      }
      out.samples.push_back(make_sample(rows[w].stamp, values, observed, std::move(grid), out.target));
      out.splits.push_back(split);
      out.groups.push_back(month);
    }
    if (w < end) {
      dropped_rows += end - w;
      ++dropped_windows;
    }
    start = end;
  }
  if (out.samples.empty()) throw DataError("no samples: air-quality file has no complete window");
  if (dropped_windows) {
    out.notes.push_back("dropped " + std::to_string(dropped_windows) + " partial windows (" +
                        std::to_string(dropped_rows) + " rows) at month boundaries");
  }
  return options.normalize ? normalize(std::move(out)) : out;
}

Dataset load_air_quality_csv(const std::filesystem::path& path, const AirQualityOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return parse_air_quality(in, options);
}

// Long CSV ----------------------------------------------------------------------------

Dataset parse_long_csv(std::istream& in, const LongCsvOptions& options) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!trim(line).empty()) header = split_line(line, ',');
  }
  if (header.empty()) throw DataError("no samples: long-format file is empty");
  for (auto& h : header) h = trim(h);
  const bool with_split = header.size() == 5 && header[4] == "split";
  if (!(header.size() == 4 || with_split) || header[0] != "sample_id" || header[1] != "time" ||
      header[2] != "feature" || header[3] != "value") {
    throw DataError(location(line_no) + ": expected header sample_id,time,feature,value[,split]");
  }

  struct Raw {
    std::string id;
    std::optional<Split> split;
    std::map<double, std::map<std::size_t, double>> cells;  // time -> feature -> value
  };
  std::vector<Raw> raws;
  std::unordered_map<std::string, std::size_t> sample_index;
  std::vector<std::string> features;
  std::unordered_map<std::string, std::size_t> feature_index;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split_line(line, ',');
    if (fields.size() != header.size()) {
      throw DataError(location(line_no) + ": expected " + std::to_string(header.size()) + " columns, found " +
                      std::to_string(fields.size()));
    }
    const std::string id = trim(fields[0]);
    const auto t = parse_number(fields[1], false);
    if (!t) throw DataError(location(line_no) + ": cannot parse time '" + fields[1] + "'");
    const auto v = parse_number(fields[3], false);
    if (!v) throw DataError(location(line_no) + ": cannot parse value '" + fields[3] + "'");
    const std::string feature = trim(fields[2]);
    if (feature.empty()) throw DataError(location(line_no) + ": empty feature name");

    auto [sit, new_sample] = sample_index.emplace(id, raws.size());
    if (new_sample) raws.push_back(Raw{id, std::nullopt, {}});
    Raw& raw = raws[sit->second];
    if (with_split) {
      const Split s = parse_split(trim(fields[4]));
      if (raw.split && *raw.split != s) throw DataError(location(line_no) + ": sample '" + id + "' changes split");
      raw.split = s;
    }
    auto [fit, new_feature] = feature_index.emplace(feature, features.size());
    if (new_feature) features.push_back(feature);
    auto& row = raw.cells[*t];
    if (!row.emplace(fit->second, *v).second) {
      throw DataError(location(line_no) + ": duplicate cell for sample '" + id + "', feature '" + feature + "'");
    }
  }
  if (raws.empty()) throw DataError("no samples: long-format file has no data rows");

  std::size_t target = 0;
  if (options.target) {
    const auto it = feature_index.find(*options.target);
    if (it == feature_index.end()) throw DataError("target feature '" + *options.target + "' not present");
    target = it->second;
  }
  const std::size_t d = features.size();
  std::size_t longest = 0;
  std::vector<SeriesSample> samples;
  for (const Raw& raw : raws) {
    const std::size_t rows = raw.cells.size();
    longest = std::max(longest, rows);
    Array values = Array::matrix(rows, d), observed = Array::matrix(rows, d);
    std::vector<double> times;
    std::size_t i = 0;
    for (const auto& [time, cells] : raw.cells) {
      times.push_back(time);
      for (const auto& [j, v] : cells) {
        values(i, j) = v;
        observed(i, j) = 1.0;
      }
      ++i;
    }
    samples.push_back(make_sample(raw.id, values, observed, TimeGrid(std::move(times)), target));
  }
  const std::size_t length = options.length.value_or(std::max<std::size_t>(longest, 2));
  Dataset out = pad_and_align(std::move(samples), length);
  out.feature_names = features;
  out.target = target;
  for (std::size_t k = 0; k < raws.size(); ++k) out.splits[k] = raws[k].split.value_or(Split::train);
  return options.normalize ? normalize(std::move(out)) : out;
}

Dataset load_long_csv(const std::filesystem::path& path, const LongCsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return parse_long_csv(in, options);
}

// Binary container ------------------------------------------------------------------
//
// "BGDS", version (u32), feature names, target, normalised flag, dropped
// features, notes, per-sample id/split/group/native length, then a tensor
// block (checkpoint encoding) with norm.mean, norm.std and, per sample k,
// s<k>.values, s<k>.mask, s<k>.times. Deltas are recomputed on load.

namespace {

constexpr char kDatasetMagic[4] = {'B', 'G', 'D', 'S'};
constexpr std::uint32_t kDatasetVersion = 1;

void write_strings(std::ostream& out, const std::vector<std::string>& v) {
  write_u32(out, static_cast<std::uint32_t>(v.size()));
  for (const auto& s : v) write_string(out, s);
}

std::vector<std::string> read_strings(std::istream& in) {
  const std::uint32_t n = read_u32(in);
  if (n > (1u << 24)) throw DataError("dataset file: string list too long");
  std::vector<std::string> v;
  for (std::uint32_t k = 0; k < n; ++k) v.push_back(read_string(in));
  return v;
}

}  // namespace

void write_dataset(const Dataset& data, std::ostream& out) {
  data.validate();
  out.write(kDatasetMagic, 4);
  write_u32(out, kDatasetVersion);
  write_strings(out, data.feature_names);
  write_u32(out, static_cast<std::uint32_t>(data.target));
  write_u32(out, data.normalized ? 1u : 0u);
  write_strings(out, data.dropped_features);
  write_strings(out, data.notes);
  write_u32(out, static_cast<std::uint32_t>(data.size()));
  for (std::size_t k = 0; k < data.size(); ++k) {
    write_string(out, data.samples[k].id);
    write_u32(out, static_cast<std::uint32_t>(data.splits[k]));
    write_string(out, data.groups[k]);
    write_u32(out, static_cast<std::uint32_t>(data.samples[k].native_length));
  }
  std::vector<NamedTensor> tensors;
  tensors.push_back({"norm.mean", Array::vector(std::span<const double>(data.norm.mean))});
  tensors.push_back({"norm.std", Array::vector(std::span<const double>(data.norm.stddev))});
  for (std::size_t k = 0; k < data.size(); ++k) {
    const auto& s = data.samples[k];
    const std::string prefix = "s" + std::to_string(k) + ".";
    tensors.push_back({prefix + "values", s.values});
    tensors.push_back({prefix + "mask", s.mask});
    tensors.push_back({prefix + "times", Array::vector(std::span<const double>(s.grid.times()))});
  }
  write_tensors(out, tensors);
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_dataset(data, out);
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

Dataset read_dataset(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kDatasetMagic)) {
    throw DataError("not a dataset file (bad magic)");
  }
  const std::uint32_t version = read_u32(in);
  if (version != kDatasetVersion) throw DataError("unsupported dataset version " + std::to_string(version));
  Dataset data;
  data.feature_names = read_strings(in);
  data.target = read_u32(in);
  data.normalized = read_u32(in) != 0;
  data.dropped_features = read_strings(in);
  data.notes = read_strings(in);
  const std::uint32_t count = read_u32(in);
  std::vector<std::size_t> native(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    SeriesSample s;
    s.id = read_string(in);
    const std::uint32_t split = read_u32(in);
    if (split > 2) throw DataError("dataset file: bad split code");
    data.splits.push_back(static_cast<Split>(split));
    data.groups.push_back(read_string(in));
    native[k] = read_u32(in);
    data.samples.push_back(std::move(s));
  }
  std::map<std::string, Array> tensors;
  for (auto& t : read_tensors(in)) tensors.emplace(std::move(t.name), std::move(t.value));
  auto take = [&](const std::string& name) -> Array& {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw DataError("dataset file: missing tensor '" + name + "'");
    return it->second;
  };
  const Array& mean = take("norm.mean");
  const Array& sd = take("norm.std");
  data.norm.mean.assign(mean.data().begin(), mean.data().end());
  data.norm.stddev.assign(sd.data().begin(), sd.data().end());
  for (std::uint32_t k = 0; k < count; ++k) {
    auto& s = data.samples[k];
    const std::string prefix = "s" + std::to_string(k) + ".";
    s.values = take(prefix + "values");
    s.mask = take(prefix + "mask");
    const Array& times = take(prefix + "times");
    s.grid = TimeGrid(std::vector<double>(times.data().begin(), times.data().end()));
    s.target = data.target;
    s.native_length = native[k];
    s.refresh_deltas();
  }
  data.validate();
  return data;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_dataset(in);
}

}  // namespace bigan
