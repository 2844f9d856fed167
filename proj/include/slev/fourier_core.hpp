#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "slev/errors.hpp"
#include "slev/tick_series.hpp"

namespace slev {

using cplx = std::complex<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Normalized Dirichlet kernel on [0, T]:
///   D_N(t) = (2N+1)^-1 sum_{|l|<=N} exp(i 2 pi l t / T)
///          = sin((2N+1) pi t / T) / ((2N+1) sin(pi t / T)).
/// The removable singularity at multiples of T evaluates to 1.
inline double dirichlet(int N, double t, double T) {
  const double x = std::numbers::pi * t / T;
  const double s = std::sin(x);
  if (std::abs(s) < 1e-14) return 1.0;
  const double width = 2.0 * N + 1.0;
  return std::sin(width * x) / (width * s);
}

/// First derivative of D_N. The +l and -l summands of the exponential form
/// pair into -2 l (2 pi / T) sin(2 pi l t / T), so the value is real by
/// construction and odd in t.
inline double dirichlet_derivative(int N, double t, double T) {
  const double omega = two_pi / T;
  double acc = 0.0;
  for (int l = 1; l <= N; ++l) acc += l * std::sin(l * omega * t);
  return -2.0 * omega * acc / (2.0 * N + 1.0);
}

/// Fourier coefficients indexed by an integer frequency in [-S, S] of a real
/// signal. Only s >= 0 is stored; negative indices are the conjugates, so
/// Hermitian symmetry holds exactly.
class CoefficientArray {
 public:
  CoefficientArray() = default;
  CoefficientArray(std::vector<cplx> half, double horizon) : half_(std::move(half)), horizon_(horizon) {}

  int max_freq() const noexcept { return static_cast<int>(half_.size()) - 1; }
  double horizon() const noexcept { return horizon_; }

  cplx operator[](int s) const {
    return s >= 0 ? half_[static_cast<std::size_t>(s)] : std::conj(half_[static_cast<std::size_t>(-s)]);
  }
  cplx at(int s) const {
    if (std::abs(s) > max_freq())
      throw InvalidInput("frequency " + std::to_string(s) + " outside [-" + std::to_string(max_freq()) + ", " +
                         std::to_string(max_freq()) + "]");
    return (*this)[s];
  }

  std::span<const cplx> nonnegative() const noexcept { return half_; }

  /// Dense copy over [-S, S]; element k holds frequency k - S.
  std::vector<cplx> materialize() const {
    const int S = max_freq();
    std::vector<cplx> full(static_cast<std::size_t>(2 * S + 1));
    for (int s = -S; s <= S; ++s) full[static_cast<std::size_t>(s + S)] = (*this)[s];
    return full;
  }

 private:
  std::vector<cplx> half_;
  double horizon_ = 1.0;
};

namespace detail {

// (1/T) sum_i exp(-i s w t_i) x_i for s = 0..S, for each weight vector in one
// pass. The phasor exp(-i s w t_i) is advanced by repeated multiplication,
// which costs O(n S) and keeps the rounding drift at O(S eps).
template <std::size_t K>
std::array<std::vector<cplx>, K> weighted_coefficients(std::span<const double> times,
                                                       std::array<std::span<const double>, K> weights,
                                                       double T, int S) {
  // Phases are taken from the fraction t_i / T. On a regular grid
  // (t_i = i T / n up to rounding) the exact fraction i / n is used, so the
  // same path on any clock gives the same coefficients up to the 1/T factor.
  const std::size_t n = weights[0].size();
  bool on_grid = true;
  for (std::size_t i = 0; i < n && on_grid; ++i)
    on_grid = std::abs(times[i] - static_cast<double>(i) * T / static_cast<double>(n)) <= 1e-13 * T;
  std::array<std::vector<cplx>, K> acc;
  for (auto& a : acc) a.assign(static_cast<std::size_t>(S) + 1, cplx{});
  for (std::size_t i = 0; i < n; ++i) {
    const double u = on_grid ? static_cast<double>(i) / static_cast<double>(n) : times[i] / T;
    const double sr = std::cos(two_pi * u);
    const double si = -std::sin(two_pi * u);
    for (std::size_t k = 0; k < K; ++k) {
      // Plain real arithmetic: std::complex multiplication goes through the
      // Annex G NaN-recovery path and is several times slower here.
      double zr = weights[k][i] / T;
      double zi = 0.0;
      auto* out = reinterpret_cast<double*>(acc[k].data());
      for (int s = 0; s <= S; ++s) {
        out[2 * s] += zr;
        out[2 * s + 1] += zi;
        const double nr = zr * sr - zi * si;
        zi = zr * si + zi * sr;
        zr = nr;
      }
    }
  }
  return acc;
}

}  // namespace detail

/// c_n(s; dp) = (1/T) sum_i exp(-i s (2 pi / T) t_i) delta_i for |s| <= max_freq.
inline CoefficientArray return_coefficients(const TickSeries& series, int max_freq) {
  if (max_freq < 0) throw InvalidInput("max_freq must be >= 0");
  const auto ts = series.timestamps().first(series.size());
  auto acc = detail::weighted_coefficients<1>(ts, {series.returns()}, series.horizon(), max_freq);
  return CoefficientArray(std::move(acc[0]), series.horizon());
}

/// Coefficients of the returns and of the squared returns, computed in one
/// pass. The squared-return spectrum feeds the diagonal corrections of the
/// control variate.
struct ReturnSpectra {
  CoefficientArray returns;
  CoefficientArray squared_returns;
};

inline ReturnSpectra return_spectra(const TickSeries& series, int max_freq) {
  if (max_freq < 0) throw InvalidInput("max_freq must be >= 0");
  std::vector<double> sq(series.returns().begin(), series.returns().end());
  for (double& x : sq) x *= x;
  const auto ts = series.timestamps().first(series.size());
  auto acc = detail::weighted_coefficients<2>(ts, {series.returns(), std::span<const double>(sq)},
                                              series.horizon(), max_freq);
  return {CoefficientArray(std::move(acc[0]), series.horizon()),
          CoefficientArray(std::move(acc[1]), series.horizon())};
}

/// c_{n,M}(l; sigma^2) = T/(2M+1) sum_{|s|<=M} c_n(s; dp) c_n(l - s; dp) for
/// |l| <= max_l. Needs return coefficients up to M + max_l.
inline CoefficientArray volatility_coefficients(const CoefficientArray& returns, int M, int max_l) {
  if (M < 1) throw InvalidInput("cutting frequency M must be >= 1");
  if (max_l < 0) throw InvalidInput("max_l must be >= 0");
  if (returns.max_freq() < M + max_l)
    throw InvalidInput("volatility_coefficients needs return coefficients on [-" + std::to_string(M + max_l) +
                       ", " + std::to_string(M + max_l) + "], got [-" + std::to_string(returns.max_freq()) + ", " +
                       std::to_string(returns.max_freq()) + "]");
  const double T = returns.horizon();
  std::vector<cplx> out(static_cast<std::size_t>(max_l) + 1);
  for (int l = 0; l <= max_l; ++l) {
    double re = 0.0;
    double im = 0.0;
    for (int s = -M; s <= M; ++s) {
      const cplx a = returns[s];
      const cplx b = returns[l - s];
      re += a.real() * b.real() - a.imag() * b.imag();
      im += a.real() * b.imag() + a.imag() * b.real();
    }
    out[static_cast<std::size_t>(l)] = cplx{re, im} * (T / (2.0 * M + 1.0));
  }
  return CoefficientArray(std::move(out), T);
}

/// Return and volatility coefficients bundled with the cut that produced them.
struct SpectralCoefficients {
  CoefficientArray return_coeffs;
  CoefficientArray vol_coeffs;
  int M = 0;
};

inline SpectralCoefficients spectral_coefficients(const TickSeries& series, int M, int max_l) {
  auto r = return_coefficients(series, M + max_l);
  auto v = volatility_coefficients(r, M, max_l);
  return {std::move(r), std::move(v), M};
}

/// A path sampled on times[0] = 0 < ... < times.back() = T.
struct SampledPath {
  std::vector<double> times;
  std::vector<double> values;
};

/// |c(l; d sigma^2) - (i l (2 pi/T) c(l; sigma^2) + (sigma^2(T) - sigma^2(0)) / T)|
/// with the Stieltjes and Riemann sums taken at left endpoints of the grid.
/// Goes to zero as the grid refines.
inline double integration_by_parts_check(const SampledPath& path, int l) {
  if (l == 0) throw InvalidInput("integration_by_parts_check requires l != 0");
  const auto& t = path.times;
  const auto& v = path.values;
  if (t.size() != v.size() || t.size() < 2) throw InvalidInput("sampled path needs >= 2 aligned points");
  const double T = t.back() - t.front();
  if (!(T > 0.0)) throw InvalidInput("sampled path has zero length");
  const double omega = two_pi / T;
  cplx lhs{};
  cplx coef{};
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const cplx e = std::polar(1.0, -l * omega * (t[i] - t.front()));
    lhs += e * (v[i + 1] - v[i]);
    coef += e * v[i] * (t[i + 1] - t[i]);
  }
  lhs /= T;
  coef /= T;
  const cplx rhs = cplx{0.0, l * omega} * coef + (v.back() - v.front()) / T;
  return std::abs(lhs - rhs);
}

}  // namespace slev
