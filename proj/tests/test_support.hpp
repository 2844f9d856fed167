#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "slev/fourier_core.hpp"
#include "slev/tick_series.hpp"

namespace slev::testing {

/// Gaussian random walk on a jittered (non-equidistant) grid over [0, T].
inline TickSeries random_walk(std::size_t n_returns, std::uint64_t seed, double T = 1.0, double step_std = 0.01,
                              bool equidistant = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, step_std);
  std::uniform_real_distribution<double> u(0.2, 1.8);
  std::vector<double> gaps(n_returns);
  double total = 0.0;
  for (double& x : gaps) {
    x = equidistant ? 1.0 : u(rng);
    total += x;
  }
  std::vector<double> t(n_returns + 1), p(n_returns + 1);
  t[0] = 0.0;
  p[0] = 0.0;
  for (std::size_t i = 0; i < n_returns; ++i) {
    t[i + 1] = t[i] + gaps[i] * T / total;
    p[i + 1] = p[i] + g(rng);
  }
  t[n_returns] = T;
  return TickSeries(std::move(t), std::move(p), T);
}

/// c_n(s; dp) by direct evaluation of each exponential, no recurrence.
inline std::complex<double> direct_return_coefficient(const TickSeries& s, int freq) {
  const double T = s.horizon();
  std::complex<double> acc{};
  const auto t = s.timestamps();
  const auto d = s.returns();
  for (std::size_t i = 0; i < d.size(); ++i) acc += std::polar(1.0, -freq * two_pi * t[i] / T) * d[i];
  return acc / T;
}

inline double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace slev::testing
