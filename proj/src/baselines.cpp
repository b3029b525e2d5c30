// SPDX-License-Identifier: Apache-2.0
#include "bigan/baselines.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bigan/errors.hpp"

namespace bigan {

void Imputer::warn(std::string message) const {
  if (std::find(warnings_.begin(), warnings_.end(), message) == warnings_.end()) warnings_.push_back(std::move(message));
}

namespace {

std::vector<SeriesSample> train_samples(const Dataset& data) {
  std::vector<SeriesSample> out;
  for (std::size_t k : data.indices(Split::train)) out.push_back(data.samples[k]);
  return out;
}

}  // namespace

// Mean -----------------------------------------------------------------------------

void MeanImputer::fit(const Dataset& data) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t k : data.indices(Split::train)) {
    const SeriesSample& s = data.samples[k];
    for (std::size_t i = 0; i < s.steps(); ++i)
      if (s.mask(i, s.target) == 1.0) {
        total += s.values(i, s.target);
        ++count;
      }
  }
  if (count == 0) throw DataError("mean imputer: target is never observed in the train split");
  mean_ = total / static_cast<double>(count);
}

double MeanImputer::mean() const {
  if (!mean_) throw std::logic_error("mean imputer used before fit");
  return *mean_;
}

std::vector<std::vector<double>> MeanImputer::impute(std::span<const SeriesSample> samples) const {
  const double fill = mean();
  std::vector<std::vector<double>> out;
  for (const auto& s : samples) {
    std::vector<double> row = s.target_values();
    for (std::size_t i = 0; i < row.size(); ++i)
      if (s.mask(i, s.target) != 1.0) row[i] = fill;
    out.push_back(std::move(row));
  }
  return out;
}

// KNN ------------------------------------------------------------------------------

KnnImputer::KnnImputer(std::size_t k) : k_(k) {
  if (k == 0) throw ConfigError("knn: k must be at least 1");
}

void KnnImputer::fit(const Dataset& data) {
  train_ = train_samples(data);
  fallback_.fit(data);
}

double KnnImputer::distance(const SeriesSample& a, const SeriesSample& b) {
  if (a.values.shape() != b.values.shape()) throw ShapeError("knn distance", a.values.shape(), b.values.shape());
  double sq = 0.0;
  std::size_t overlap = 0;
  for (std::size_t c = 0; c < a.values.size(); ++c) {
    if (a.mask[c] == 1.0 && b.mask[c] == 1.0) {
      const double diff = a.values[c] - b.values[c];
      sq += diff * diff;
      ++overlap;
    }
  }
  if (overlap == 0) return std::numeric_limits<double>::infinity();
  return std::sqrt(sq / static_cast<double>(overlap));
}

std::vector<std::vector<double>> KnnImputer::impute(std::span<const SeriesSample> samples) const {
  const double mean = fallback_.mean();
  std::vector<std::vector<double>> out;
  std::vector<std::pair<double, std::size_t>> ranked;
  for (const auto& q : samples) {
    std::vector<double> row = q.target_values();
    std::vector<double> dist(train_.size());
    for (std::size_t r = 0; r < train_.size(); ++r)
      dist[r] = train_[r].id == q.id ? std::numeric_limits<double>::infinity() : distance(q, train_[r]);
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (q.mask(i, q.target) == 1.0) continue;
      ranked.clear();
      for (std::size_t r = 0; r < train_.size(); ++r)
        if (std::isfinite(dist[r]) && train_[r].mask(i, train_[r].target) == 1.0) ranked.emplace_back(dist[r], r);
      if (ranked.empty()) {
        row[i] = mean;
        continue;
      }
      if (ranked.size() < k_) warn("knn: k exceeds the candidate pool; using all candidates");
      const std::size_t take = std::min(k_, ranked.size());
      std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take), ranked.end());
      double total = 0.0;
      for (std::size_t c = 0; c < take; ++c) total += train_[ranked[c].second].values(i, q.target);
      row[i] = total / static_cast<double>(take);
    }
    out.push_back(std::move(row));
  }
  return out;
}

// MICE -----------------------------------------------------------------------------

MiceImputer::MiceImputer(std::size_t iterations) : iterations_(iterations) {
  if (iterations == 0) throw ConfigError("mice: n_iter must be at least 1");
}

void MiceImputer::fit(const Dataset& data) {
  train_.clear();
  for (auto& s : train_samples(data)) train_.push_back(std::move(s));
}

Array MiceImputer::complete_table(const Array& values, const Array& observed, std::size_t iterations,
                                  std::size_t* ridge_fallbacks) {
  if (values.shape() != observed.shape()) throw ShapeError("mice table", values.shape(), observed.shape());
  const std::size_t rows = values.rows(), cols = values.cols();
  Eigen::MatrixXd x(rows, cols);
  for (std::size_t c = 0; c < cols; ++c) {
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r < rows; ++r)
      if (observed(r, c) == 1.0) {
        total += values(r, c);
        ++count;
      }
    const double mean = count ? total / static_cast<double>(count) : 0.0;
    for (std::size_t r = 0; r < rows; ++r) x(r, c) = observed(r, c) == 1.0 ? values(r, c) : mean;
  }
  for (std::size_t it = 0; it < iterations; ++it) {
    for (std::size_t c = 0; c < cols; ++c) {
      std::vector<Eigen::Index> fit_rows, fill_rows;
      for (std::size_t r = 0; r < rows; ++r)
        (observed(r, c) == 1.0 ? fit_rows : fill_rows).push_back(static_cast<Eigen::Index>(r));
      if (fill_rows.empty() || fit_rows.empty()) continue;
      const auto p = static_cast<Eigen::Index>(cols);  // intercept + other columns
      auto design = [&](Eigen::Index r, Eigen::MatrixXd& a, Eigen::Index row) {
        a(row, 0) = 1.0;
        Eigen::Index k = 1;
        for (std::size_t o = 0; o < cols; ++o)
          if (o != c) a(row, k++) = x(r, static_cast<Eigen::Index>(o));
      };
      Eigen::MatrixXd a(static_cast<Eigen::Index>(fit_rows.size()), p);
      Eigen::VectorXd y(static_cast<Eigen::Index>(fit_rows.size()));
      for (std::size_t k = 0; k < fit_rows.size(); ++k) {
        design(fit_rows[k], a, static_cast<Eigen::Index>(k));
        y(static_cast<Eigen::Index>(k)) = x(fit_rows[k], static_cast<Eigen::Index>(c));
      }
      Eigen::VectorXd beta;
      const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
      if (qr.rank() == p) {
        beta = qr.solve(y);
      } else {
        const Eigen::MatrixXd gram = a.transpose() * a + kRidge * Eigen::MatrixXd::Identity(p, p);
        beta = gram.ldlt().solve(a.transpose() * y);
        if (ridge_fallbacks) ++*ridge_fallbacks;
      }
      Eigen::MatrixXd q(1, p);
      for (Eigen::Index r : fill_rows) {
        design(r, q, 0);
        x(r, static_cast<Eigen::Index>(c)) = (q * beta)(0, 0);
      }
    }
  }
  Array out = Array::matrix(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  return out;
}

std::vector<std::vector<double>> MiceImputer::impute(std::span<const SeriesSample> samples) const {
  if (samples.empty()) return {};
  const std::size_t d = samples.front().features();
  std::vector<std::pair<const SeriesSample*, std::size_t>> rows;  // (sample, step)
  for (const auto& s : train_)
    for (std::size_t i = 0; i < s.steps(); ++i) {
      bool any = false;
      for (std::size_t j = 0; j < d; ++j) any = any || s.mask(i, j) == 1.0;
      if (any) rows.emplace_back(&s, i);
    }
  const std::size_t query_start = rows.size();
  for (const auto& s : samples)
    for (std::size_t i = 0; i < s.steps(); ++i) rows.emplace_back(&s, i);

  Array values = Array::matrix(rows.size(), d), observed = Array::matrix(rows.size(), d);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& [s, i] = rows[r];
    if (s->features() != d) throw ShapeError("mice", s->values.shape(), samples.front().values.shape());
    for (std::size_t j = 0; j < d; ++j) {
      values(r, j) = s->values(i, j);
      observed(r, j) = s->mask(i, j);
    }
  }
  std::size_t fallbacks = 0;
  const Array table = complete_table(values, observed, iterations_, &fallbacks);
  if (fallbacks) warn("mice: singular regression solved with ridge penalty 1e-6");

  std::vector<std::vector<double>> out;
  std::size_t r = query_start;
  for (const auto& s : samples) {
    std::vector<double> row = s.target_values();
    for (std::size_t i = 0; i < s.steps(); ++i, ++r)
      if (s.mask(i, s.target) != 1.0) row[i] = table(r, s.target);
    out.push_back(std::move(row));
  }
  return out;
}

// Linear interpolation --------------------------------------------------------------

void InterpolationImputer::fit(const Dataset& data) { fallback_.fit(data); }

std::vector<std::vector<double>> InterpolationImputer::impute(std::span<const SeriesSample> samples) const {
  std::vector<std::vector<double>> out;
  for (const auto& s : samples) {
    std::vector<double> row = s.target_values();
    std::vector<std::size_t> seen;
    for (std::size_t i = 0; i < row.size(); ++i)
      if (s.mask(i, s.target) == 1.0) seen.push_back(i);
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (s.mask(i, s.target) == 1.0) continue;
      if (seen.empty()) {
        row[i] = fallback_.mean();
        continue;
      }
      const auto next = std::lower_bound(seen.begin(), seen.end(), i);
      if (next == seen.begin()) {
        row[i] = row[*next];
      } else if (next == seen.end()) {
        row[i] = row[seen.back()];
      } else {
        const std::size_t lo = *(next - 1), hi = *next;
        const double t = (s.grid[i] - s.grid[lo]) / (s.grid[hi] - s.grid[lo]);
        row[i] = row[lo] + t * (row[hi] - row[lo]);
      }
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace bigan
