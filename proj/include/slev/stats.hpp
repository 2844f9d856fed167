#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "slev/errors.hpp"

// Sample moments. Sums run over sorted terms so results do not depend on the
// order of the observations (replication order must not move an argmin).
namespace slev::stats {

inline double ordered_sum(std::vector<double> terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double x : terms) s += x;
  return s;
}

inline double mean(std::span<const double> x) {
  if (x.empty()) throw InvalidInput("mean of an empty sample");
  return ordered_sum(std::vector<double>(x.begin(), x.end())) / static_cast<double>(x.size());
}

inline double sum_of_cross(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidInput("paired samples differ in length");
  const double mx = mean(x);
  const double my = mean(y);
  std::vector<double> t(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) t[i] = (x[i] - mx) * (y[i] - my);
  return ordered_sum(std::move(t));
}

/// (d-1)-denominator covariance.
inline double sample_covariance(std::span<const double> x, std::span<const double> y) {
  if (x.size() < 2) throw InvalidInput("sample covariance needs >= 2 observations");
  return sum_of_cross(x, y) / static_cast<double>(x.size() - 1);
}

inline double sample_variance(std::span<const double> x) { return sample_covariance(x, x); }
inline double sample_std(std::span<const double> x) { return std::sqrt(sample_variance(x)); }

inline double population_covariance(std::span<const double> x, std::span<const double> y) {
  return sum_of_cross(x, y) / static_cast<double>(x.size());
}
inline double population_variance(std::span<const double> x) { return population_covariance(x, x); }

inline double correlation(std::span<const double> x, std::span<const double> y) {
  const double sxy = sum_of_cross(x, y);
  const double sxx = sum_of_cross(x, x);
  const double syy = sum_of_cross(y, y);
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

/// Standard error of the sample mean.
inline double standard_error(std::span<const double> x) {
  return sample_std(x) / std::sqrt(static_cast<double>(x.size()));
}

/// Mean of (est - truth)^2.
inline double mse(std::span<const double> est, std::span<const double> truth) {
  if (est.size() != truth.size() || est.empty()) throw InvalidInput("mse needs equal, nonempty samples");
  std::vector<double> t(est.size());
  for (std::size_t i = 0; i < est.size(); ++i) t[i] = (est[i] - truth[i]) * (est[i] - truth[i]);
  return ordered_sum(std::move(t)) / static_cast<double>(est.size());
}

inline double bias(std::span<const double> est, std::span<const double> truth) {
  if (est.size() != truth.size() || est.empty()) throw InvalidInput("bias needs equal, nonempty samples");
  std::vector<double> t(est.size());
  for (std::size_t i = 0; i < est.size(); ++i) t[i] = est[i] - truth[i];
  return ordered_sum(std::move(t)) / static_cast<double>(est.size());
}

/// Average ranks (ties share the mean rank).
inline std::vector<double> ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  return correlation(rx, ry);
}

}  // namespace slev::stats
