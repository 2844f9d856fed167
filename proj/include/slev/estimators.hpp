#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "slev/errors.hpp"
#include "slev/fourier_core.hpp"
#include "slev/tick_series.hpp"

namespace slev {

/// Cutting frequencies: M for the volatility reconstruction from return
/// coefficients, N for the leverage / vol-of-vol sums. n is informational.
struct CutFrequencies {
  int M = 1;
  int N = 1;
  std::size_t n = 0;

  void validate() const {
    if (M < 1) throw InvalidInput("cutting frequency M must be >= 1");
    if (N < 1) throw InvalidInput("cutting frequency N must be >= 1");
  }
  friend bool operator==(const CutFrequencies& a, const CutFrequencies& b) { return a.M == b.M && a.N == b.N; }
};

enum class LeverageForm { spectral, triple_sum };

struct LeverageEstimate {
  double value = 0.0;
  LeverageForm form = LeverageForm::spectral;
  CutFrequencies cut;
  /// Discarded imaginary part of the spectral sum (zero for the triple sum).
  double imag_residual = 0.0;

  bool healthy() const { return imag_residual < 1e-8 * std::max(1.0, std::abs(value)); }
};

struct RTEstimate {
  double value = 0.0;
  LeverageEstimate numerator;
  double fev = 0.0;
  double fevv = 0.0;
  bool corrected = false;
};

/// Return and squared-return spectra of one series up to a maximum frequency.
/// Computed once and shared read-only by every (M, N) evaluation.
class SpectralCache {
 public:
  SpectralCache(const TickSeries& series, int max_freq)
      : spectra_(return_spectra(series, max_freq)), n_(series.size()), horizon_(series.horizon()) {}

  const CoefficientArray& returns() const noexcept { return spectra_.returns; }
  const CoefficientArray& squared_returns() const noexcept { return spectra_.squared_returns; }
  int max_freq() const noexcept { return spectra_.returns.max_freq(); }
  std::size_t n() const noexcept { return n_; }
  double horizon() const noexcept { return horizon_; }

  void require(int freq) const {
    if (freq > max_freq())
      throw InvalidInput("spectral cache holds frequencies up to " + std::to_string(max_freq()) + ", need " +
                         std::to_string(freq));
  }

 private:
  ReturnSpectra spectra_;
  std::size_t n_;
  double horizon_;
};

namespace detail {

struct ComplexSum {
  double real = 0.0;
  double imag = 0.0;
};

// T^2/(2N+1) sum_{|l|<=N} i l w x(l) y(-l), kept complex.
inline ComplexSum derivative_pairing(const CoefficientArray& x, const CoefficientArray& y, int N, double T) {
  const double omega = two_pi / T;
  double re = 0.0, im = 0.0;
  for (int l = -N; l <= N; ++l) {
    const cplx a = x[l];
    const cplx b = y[-l];
    const double pr = a.real() * b.real() - a.imag() * b.imag();
    const double pi = a.real() * b.imag() + a.imag() * b.real();
    // multiply by i l w
    re += -l * omega * pi;
    im += l * omega * pr;
  }
  const double scale = T * T / (2.0 * N + 1.0);
  return {re * scale, im * scale};
}

// Sum of the integers l in [-N, N] with |m - l| <= M.
inline double shifted_window_sum(int m, int M, int N) {
  const long lo = std::max(-N, m - M);
  const long hi = std::min(N, m + M);
  if (lo > hi) return 0.0;
  return static_cast<double>((lo + hi) * (hi - lo + 1)) / 2.0;
}

}  // namespace detail

//---------------------------------------------------------------------------
// FEL
//---------------------------------------------------------------------------

/// FEL from precomputed volatility coefficients (|l| <= N at cut M):
///   T^2/(2N+1) sum_{|l|<=N} i l (2 pi/T) c_{n,M}(l; sigma^2) c_n(-l; dp).
inline LeverageEstimate fel_from_vol(const CoefficientArray& returns, const CoefficientArray& vol, CutFrequencies cut) {
  cut.validate();
  const auto s = detail::derivative_pairing(vol, returns, cut.N, returns.horizon());
  return {s.real, LeverageForm::spectral, cut, std::abs(s.imag)};
}

inline LeverageEstimate fel_spectral(const SpectralCache& cache, CutFrequencies cut) {
  cut.validate();
  if (cache.n() < 3) throw InvalidInput("FEL needs at least 3 returns");
  cache.require(cut.M + cut.N);
  cut.n = cache.n();
  const auto vol = volatility_coefficients(cache.returns(), cut.M, cut.N);
  return fel_from_vol(cache.returns(), vol, cut);
}

inline LeverageEstimate fel_spectral(const TickSeries& series, CutFrequencies cut) {
  cut.validate();
  if (series.size() < 3) throw InvalidInput("FEL needs at least 3 returns");
  return fel_spectral(SpectralCache(series, cut.M + cut.N), cut);
}

/// Time-domain form sum_{i,j,k} D_M(t_i - t_j) D'_N(t_k - t_j) delta_i delta_j delta_k,
/// evaluated literally in O(n^3). Reference implementation for small n.
inline LeverageEstimate fel_triple_sum(const TickSeries& series, CutFrequencies cut, std::size_t cap = 500) {
  cut.validate();
  const std::size_t n = series.size();
  if (n > cap)
    throw InvalidInput("fel_triple_sum is O(n^3) and capped at n = " + std::to_string(cap) + " (got " +
                       std::to_string(n) + "); use fel_spectral");
  const auto t = series.timestamps();
  const auto d = series.returns();
  const double T = series.horizon();
  std::vector<double> dm(n * n), dn(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      dm[a * n + b] = dirichlet(cut.M, t[a] - t[b], T);
      dn[a * n + b] = dirichlet_derivative(cut.N, t[a] - t[b], T);
    }
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) acc += dm[i * n + j] * dn[k * n + j] * d[i] * d[j] * d[k];
  cut.n = n;
  return {acc, LeverageForm::triple_sum, cut, 0.0};
}

//---------------------------------------------------------------------------
// FEV, FEVV
//---------------------------------------------------------------------------

/// T^2/(2M+1) sum_{|s|<=M} c_n(s; dp) c_n(-s; dp), computed as T c_{n,M}(0; sigma^2).
inline double fev(const SpectralCache& cache, int M) {
  if (M < 1) throw InvalidInput("cutting frequency M must be >= 1");
  cache.require(M);
  return cache.horizon() * volatility_coefficients(cache.returns(), M, 0)[0].real();
}

inline double fev(const TickSeries& series, int M) {
  if (M < 1) throw InvalidInput("cutting frequency M must be >= 1");
  return fev(SpectralCache(series, M), M);
}

/// Bartlett-weighted vol-of-vol from volatility coefficients with |l| <= N:
///   T^2/(2N+1) sum_{|l|<=N} (1 - |l|/N) l^2 (4 pi^2/T^2) |c_{n,M}(l; sigma^2)|^2.
/// The edge frequencies carry zero weight, so N = 1 gives exactly 0.
inline double fevv_from_vol(const CoefficientArray& vol, int N) {
  if (N < 1) throw InvalidInput("FEVV needs N >= 1");
  const double T = vol.horizon();
  const double omega = two_pi / T;
  double acc = 0.0;
  for (int l = 1; l < N; ++l) {
    const double w = 1.0 - static_cast<double>(l) / N;
    acc += 2.0 * w * l * l * omega * omega * std::norm(vol[l]);
  }
  return T * T / (2.0 * N + 1.0) * acc;
}

inline double fevv(const SpectralCache& cache, CutFrequencies cut) {
  cut.validate();
  cache.require(cut.M + cut.N);
  return fevv_from_vol(volatility_coefficients(cache.returns(), cut.M, cut.N), cut.N);
}

inline double fevv(const TickSeries& series, CutFrequencies cut) {
  cut.validate();
  return fevv(SpectralCache(series, cut.M + cut.N), cut);
}

//---------------------------------------------------------------------------
// Control variate
//---------------------------------------------------------------------------

/// Upsilon: the triple sum restricted to pairwise distinct i, j, k.
///
/// Inclusion-exclusion over the diagonal sheets of the full triple product F:
///   Upsilon = F - S(i=j) - S(j=k) - S(i=k) + 2 S(i=j=k).
/// S(j=k) and S(i=j=k) carry the factor D'_N(0) = 0 and vanish. The other
/// two sheets have O(n (M+N)) spectral forms, with q the coefficients of the
/// squared returns and a those of the returns:
///   S(i=j) = T^2/(2N+1) sum_{|l|<=N} i l w q(l) a(-l),
///   S(i=k) = T^2 i w / ((2M+1)(2N+1)) sum_{|m|<=M+N} W(m) q(-m) a(m),
/// where W(m) sums l over |l| <= N, |m - l| <= M.
inline double upsilon_from_vol(const SpectralCache& cache, const CoefficientArray& vol, CutFrequencies cut) {
  cut.validate();
  const double T = cache.horizon();
  const double omega = two_pi / T;
  const auto& a = cache.returns();
  const auto& q = cache.squared_returns();
  const double full = detail::derivative_pairing(vol, a, cut.N, T).real;
  const double sheet_ij = detail::derivative_pairing(q, a, cut.N, T).real;
  double sheet_ik = 0.0;
  for (int m = -(cut.M + cut.N); m <= cut.M + cut.N; ++m) {
    const double w = detail::shifted_window_sum(m, cut.M, cut.N);
    if (w == 0.0) continue;
    const cplx qa = q[-m] * a[m];
    sheet_ik += -w * qa.imag();  // real part of i * w * qa
  }
  sheet_ik *= T * T * omega / ((2.0 * cut.M + 1.0) * (2.0 * cut.N + 1.0));
  return full - sheet_ij - sheet_ik;
}

inline double upsilon(const SpectralCache& cache, CutFrequencies cut) {
  cut.validate();
  if (cache.n() < 3) {
    std::clog << "warning: upsilon needs at least 3 returns (pairwise distinct triples); returning 0\n";
    return 0.0;
  }
  cache.require(cut.M + cut.N);
  return upsilon_from_vol(cache, volatility_coefficients(cache.returns(), cut.M, cut.N), cut);
}

inline double upsilon(const TickSeries& series, CutFrequencies cut) {
  cut.validate();
  if (series.size() < 3) {
    std::clog << "warning: upsilon needs at least 3 returns (pairwise distinct triples); returning 0\n";
    return 0.0;
  }
  return upsilon(SpectralCache(series, cut.M + cut.N), cut);
}

/// b* = Cov(eta~, Upsilon) / Var(Upsilon).
inline double optimal_b(double cov_eta_upsilon, double var_upsilon) {
  if (!(var_upsilon > 0.0)) throw InvalidInput("optimal_b: Var(Upsilon) must be > 0");
  return cov_eta_upsilon / var_upsilon;
}

/// eta* = eta~ - b Upsilon*.
inline double fel_corrected(double eta_tilde, double upsilon_star, double b) { return eta_tilde - b * upsilon_star; }

/// Expected noise contribution to the FEL on an equidistant grid of n returns:
///   2 (n-1) (D_M(T/n) - 1) D'_N(T/n) E[zeta^3].
inline double noise_bias_analytic(std::size_t n, CutFrequencies cut, double zeta3, double T = 1.0) {
  cut.validate();
  if (n < 1) throw InvalidInput("noise_bias_analytic needs n >= 1");
  const double tau = T / static_cast<double>(n);
  return 2.0 * static_cast<double>(n - 1) * (dirichlet(cut.M, tau, T) - 1.0) * dirichlet_derivative(cut.N, tau, T) *
         zeta3;
}

inline double noise_bias_analytic(const TickSeries& series, CutFrequencies cut, double zeta3) {
  if (!series.is_equidistant(1e-9))
    throw InvalidInput("noise_bias_analytic assumes an equidistant grid (spacing uniform to 1e-9)");
  return noise_bias_analytic(series.size(), cut, zeta3, series.horizon());
}

//---------------------------------------------------------------------------
// R_T
//---------------------------------------------------------------------------

/// Control-variate correction applied to the numerator.
struct Correction {
  double b = 0.0;
  double upsilon_star = 0.0;
};

/// numerator / sqrt(fev * fevv); not clamped to [-1, 1].
inline double rt_ratio(double numerator, double fev_value, double fevv_value) {
  if (!(fev_value > 0.0) || !(fevv_value > 0.0))
    throw DegenerateDenominator("R_T denominator is not positive (fev = " + std::to_string(fev_value) +
                                    ", fevv = " + std::to_string(fevv_value) + ")",
                                fev_value, fevv_value);
  return numerator / std::sqrt(fev_value * fevv_value);
}

inline RTEstimate rt_estimate(const TickSeries& series, CutFrequencies cut_lev, int m_fev, CutFrequencies cut_fevv,
                              std::optional<Correction> correction = std::nullopt) {
  cut_lev.validate();
  cut_fevv.validate();
  const int need = std::max({cut_lev.M + cut_lev.N, m_fev, cut_fevv.M + cut_fevv.N});
  const SpectralCache cache(series, need);
  RTEstimate out;
  out.numerator = fel_spectral(cache, cut_lev);
  out.fev = fev(cache, m_fev);
  out.fevv = fevv(cache, cut_fevv);
  double num = out.numerator.value;
  if (correction) {
    num = fel_corrected(num, correction->upsilon_star, correction->b);
    out.corrected = true;
  }
  out.value = rt_ratio(num, out.fev, out.fevv);
  return out;
}

}  // namespace slev
