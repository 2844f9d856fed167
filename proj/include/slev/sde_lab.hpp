#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "slev/errors.hpp"
#include "slev/stats.hpp"
#include "slev/tick_series.hpp"

namespace slev {

//---------------------------------------------------------------------------
// Random streams
//---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of stream `index` under `master`. Streams depend only on the pair, so
/// parallel schedules reproduce sequential results.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

//---------------------------------------------------------------------------
// Models
//---------------------------------------------------------------------------

/// dp = sigma dW1, d sigma^2 = alpha (beta - sigma^2) dt + nu sigma dW2,
/// corr(dW1, dW2) = rho.
struct HestonParams {
  double alpha = 0.01;
  double beta = 0.2;
  double nu = 0.05;
  double rho = -0.2;
  double sigma2_0 = 0.2;
  double p0 = 4.605170185988092;  // log(100)

  void validate() const {
    if (!(alpha >= 0.0)) throw InvalidInput("heston: alpha must be >= 0");
    if (!(beta > 0.0)) throw InvalidInput("heston: beta must be > 0");
    if (!(nu >= 0.0)) throw InvalidInput("heston: nu must be >= 0");
    if (!(std::abs(rho) <= 1.0)) throw InvalidInput("heston: rho must lie in [-1, 1]");
    if (!(sigma2_0 >= 0.0)) throw InvalidInput("heston: sigma2_0 must be >= 0");
    if (!std::isfinite(p0)) throw InvalidInput("heston: p0 must be finite");
  }
};

/// Heston variance with a Jacobi correlation:
///   dp = sigma dX,  dX = rho(t) dW1 + sqrt(1 - rho^2) dW2,
///   d sigma^2 = alpha (beta - sigma^2) dt + nu sigma dW1,
///   d rho = ((2 xi - eta) - eta rho) dt + theta sqrt((1 + rho)(1 - rho)) dW0,
/// with W0, W1, W2 independent.
struct GenHestonParams {
  double alpha = 0.01;
  double beta = 0.2;
  double nu = 0.05;
  double xi = 0.02;
  double eta_mr = 0.5;
  double theta = 0.5;
  double rho_0 = -0.04;
  double sigma2_0 = 0.2;
  double p0 = 4.605170185988092;

  /// Long-run level of rho(t): (2 xi - eta) / eta.
  double mean_reversion_target() const { return (2.0 * xi - eta_mr) / eta_mr; }

  void validate() const {
    if (!(alpha >= 0.0)) throw InvalidInput("gen_heston: alpha must be >= 0");
    if (!(beta > 0.0)) throw InvalidInput("gen_heston: beta must be > 0");
    if (!(nu >= 0.0)) throw InvalidInput("gen_heston: nu must be >= 0");
    if (!(xi > 0.0)) throw InvalidInput("gen_heston: xi must be > 0");
    if (!(eta_mr > 0.0)) throw InvalidInput("gen_heston: eta_mr must be > 0");
    if (!(theta > 0.0)) throw InvalidInput("gen_heston: theta must be > 0");
    if (!(xi <= eta_mr))
      throw InvalidInput("gen_heston: constraint 0 <= xi <= eta_mr violated (mean-reversion target (2 xi - eta)/eta "
                         "must lie in [-1, 1])");
    if (!(std::abs(rho_0) <= 1.0)) throw InvalidInput("gen_heston: rho_0 must lie in [-1, 1]");
    if (!(sigma2_0 >= 0.0)) throw InvalidInput("gen_heston: sigma2_0 must be >= 0");
    if (!std::isfinite(p0)) throw InvalidInput("gen_heston: p0 must be finite");
  }
};

/// `steps` Euler steps over [0, horizon].
struct SimGrid {
  std::size_t steps = 21600;
  double horizon = 0.05;

  void validate() const {
    if (steps < 2) throw InvalidInput("simulation grid needs >= 2 steps");
    if (!(horizon > 0.0)) throw InvalidInput("simulation horizon must be > 0");
  }
  double dt() const { return horizon / static_cast<double>(steps); }
};

//---------------------------------------------------------------------------
// Noise
//---------------------------------------------------------------------------

enum class NoiseKind { none, gaussian, shifted_exponential };

inline std::string to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::none: return "none";
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::shifted_exponential: return "shifted_exponential";
  }
  return "none";
}

inline NoiseKind parse_noise_kind(const std::string& s) {
  if (s == "none") return NoiseKind::none;
  if (s == "gaussian") return NoiseKind::gaussian;
  if (s == "shifted_exponential") return NoiseKind::shifted_exponential;
  throw InvalidInput("unknown noise kind '" + s + "'");
}

/// I.i.d. additive shocks on the log-price. The shock std is
/// noise_to_signal times the sample std of the clean one-step returns, unless
/// absolute_std is given. The shifted exponential is std * (E - 1) with
/// E ~ Exp(1), i.e. rate 1/std centred; negative_skew flips its sign.
struct NoiseConfig {
  NoiseKind kind = NoiseKind::gaussian;
  double noise_to_signal = 0.8;
  bool negative_skew = false;
  std::optional<double> absolute_std;

  void validate() const {
    if (!(noise_to_signal >= 0.0)) throw InvalidInput("noise_to_signal must be >= 0");
    if (absolute_std && !(*absolute_std >= 0.0)) throw InvalidInput("absolute noise std must be >= 0");
  }
};

/// Central moments E[zeta^k] of one shock.
struct ShockMoments {
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
  double m6 = 0.0;
};

inline ShockMoments shock_moments(NoiseKind kind, double std, bool negative_skew = false) {
  const double v = std * std;
  switch (kind) {
    case NoiseKind::none: return {};
    case NoiseKind::gaussian: return {v, 0.0, 3.0 * v * v, 15.0 * v * v * v};
    case NoiseKind::shifted_exponential: {
      // Central moments of Exp(1): 1, 2, 9, 44, 265.
      const double sign = negative_skew ? -1.0 : 1.0;
      return {v, sign * 2.0 * v * std, 9.0 * v * v, 265.0 * v * v * v};
    }
  }
  return {};
}

/// Moments of the noise increments eps_i = zeta_{i+1} - zeta_i.
struct IncrementMoments {
  double e2 = 0.0;                  // E[eps^2]
  double e4 = 0.0;                  // E[eps^4]
  double sq_next = 0.0;             // E[eps_i^2 eps_{i+1}]
  double sq_prev = 0.0;             // E[eps_i^2 eps_{i-1}]
  double sq_sq_far = 0.0;           // E[eps_j^2 eps_i^2], |i - j| > 1
  double sq_sq_adjacent = 0.0;      // E[eps_j^2 eps_i^2], |i - j| = 1
  double quartic_sq_far = 0.0;      // E[eps_j^4 eps_i^2], |i - j| > 1
  double quartic_sq_adjacent = 0.0; // E[eps_j^4 eps_i^2], |i - j| = 1
};

inline IncrementMoments noise_increment_moments(const ShockMoments& z) {
  IncrementMoments m;
  m.e2 = 2.0 * z.m2;
  m.e4 = 2.0 * z.m4 + 6.0 * z.m2 * z.m2;
  m.sq_next = -z.m3;
  m.sq_prev = z.m3;
  m.sq_sq_far = 4.0 * z.m2 * z.m2;
  m.sq_sq_adjacent = 3.0 * z.m2 * z.m2 + z.m4;
  m.quartic_sq_far = 4.0 * z.m4 * z.m2 + 12.0 * z.m2 * z.m2 * z.m2;
  // Both adjacent orders give the same value (reverse the three shocks).
  m.quartic_sq_adjacent = 9.0 * z.m4 * z.m2 + z.m6 + 6.0 * z.m2 * z.m2 * z.m2 - 4.0 * z.m3 * z.m3;
  return m;
}

inline IncrementMoments noise_increment_moments(const NoiseConfig& cfg, double std) {
  return noise_increment_moments(shock_moments(cfg.kind, std, cfg.negative_skew));
}

/// Draws n i.i.d. shocks of the given kind and std.
inline std::vector<double> draw_shocks(NoiseKind kind, double std, bool negative_skew, std::size_t n,
                                       std::uint64_t seed) {
  std::vector<double> z(n, 0.0);
  if (kind == NoiseKind::none || std == 0.0) return z;
  std::mt19937_64 rng(seed);
  if (kind == NoiseKind::gaussian) {
    std::normal_distribution<double> g(0.0, 1.0);
    for (double& x : z) x = std * g(rng);
  } else {
    std::exponential_distribution<double> e(1.0);
    const double sign = negative_skew ? -1.0 : 1.0;
    for (double& x : z) x = sign * std * (e(rng) - 1.0);
  }
  return z;
}

/// Shock std implied by cfg for this clean path.
inline double noise_std_for(const TickSeries& clean, const NoiseConfig& cfg) {
  if (cfg.kind == NoiseKind::none) return 0.0;
  if (cfg.absolute_std) return *cfg.absolute_std;
  const auto r = clean.returns();
  return cfg.noise_to_signal * stats::sample_std(std::vector<double>(r.begin(), r.end()));
}

/// p~(t_i) = p(t_i) + zeta(t_i).
inline TickSeries add_noise(const TickSeries& clean, const NoiseConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const double std = noise_std_for(clean, cfg);
  if (cfg.kind == NoiseKind::none || std == 0.0) return clean;
  auto z = draw_shocks(cfg.kind, std, cfg.negative_skew, clean.observations(), seed);
  std::vector<double> p(clean.log_prices().begin(), clean.log_prices().end());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] += z[i];
  return TickSeries(std::vector<double>(clean.timestamps().begin(), clean.timestamps().end()), std::move(p),
                    clean.horizon());
}

//---------------------------------------------------------------------------
// Simulation output
//---------------------------------------------------------------------------

struct SimOutput {
  TickSeries clean_series;
  TickSeries noisy_series;
  std::vector<double> vol_path;  // sigma^2(t_i), i = 0..n
  std::vector<double> rho_path;  // rho(t_i); constant for Heston
  double true_eta = 0.0;         // int sigma gamma rho dt
  double true_iv = 0.0;          // int sigma^2 dt
  double true_ivv = 0.0;         // int gamma^2 dt
  double true_rt = 0.0;          // eta / sqrt(iv * ivv)
  double noise_std = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::vector<double> grid_times(const SimGrid& g) {
  std::vector<double> t(g.steps + 1);
  for (std::size_t i = 0; i <= g.steps; ++i)
    t[i] = static_cast<double>(i) * g.horizon / static_cast<double>(g.steps);
  t[g.steps] = g.horizon;
  return t;
}

inline double ratio_or_zero(double eta, double iv, double ivv) {
  const double d = iv * ivv;
  return d > 0.0 ? eta / std::sqrt(d) : 0.0;
}

}  // namespace detail

/// Euler-Maruyama with full truncation: max(sigma^2, 0) enters both the drift
/// and the diffusion, and the recorded variance path is the truncated value.
/// True integrals are left-endpoint Riemann sums on the same grid.
inline SimOutput simulate_heston(const HestonParams& prm, const SimGrid& grid, std::uint64_t seed,
                                 const NoiseConfig& noise = {NoiseKind::none}) {
  prm.validate();
  grid.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t n = grid.steps;
  const double dt = grid.dt();
  const double sdt = std::sqrt(dt);
  const double rho_perp = std::sqrt(std::max(0.0, 1.0 - prm.rho * prm.rho));

  std::vector<double> p(n + 1), vol(n + 1);
  p[0] = prm.p0;
  double v = prm.sigma2_0;
  double eta = 0.0, iv = 0.0, ivv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double vp = std::max(v, 0.0);
    const double sig = std::sqrt(vp);
    vol[i] = vp;
    const double gam = prm.nu * sig;
    eta += sig * gam * prm.rho * dt;
    iv += vp * dt;
    ivv += gam * gam * dt;
    const double z1 = g(rng);
    const double z2 = prm.rho * z1 + rho_perp * g(rng);
    p[i + 1] = p[i] + sig * sdt * z1;
    v = v + prm.alpha * (prm.beta - vp) * dt + gam * sdt * z2;
  }
  vol[n] = std::max(v, 0.0);

  TickSeries clean(detail::grid_times(grid), std::move(p), grid.horizon);
  const double nstd = noise_std_for(clean, noise);
  TickSeries noisy = add_noise(clean, noise, derive_seed(seed, 1));
  SimOutput out{std::move(clean), std::move(noisy), std::move(vol), std::vector<double>(n + 1, prm.rho),
                eta, iv, ivv, detail::ratio_or_zero(eta, iv, ivv), nstd, seed};
  return out;
}

/// Generalized Heston path. rho(t) is clamped to [-1 + 1e-12, 1 - 1e-12]
/// after every step and the Jacobi diffusion uses the clamped value.
inline SimOutput simulate_gen_heston(const GenHestonParams& prm, const SimGrid& grid, std::uint64_t seed,
                                     const NoiseConfig& noise = {NoiseKind::none}) {
  prm.validate();
  grid.validate();
  constexpr double edge = 1.0 - 1e-12;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t n = grid.steps;
  const double dt = grid.dt();
  const double sdt = std::sqrt(dt);
  const double drift_level = 2.0 * prm.xi - prm.eta_mr;

  std::vector<double> p(n + 1), vol(n + 1), rho(n + 1);
  p[0] = prm.p0;
  double v = prm.sigma2_0;
  double r = std::clamp(prm.rho_0, -edge, edge);
  double eta = 0.0, iv = 0.0, ivv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double vp = std::max(v, 0.0);
    const double sig = std::sqrt(vp);
    vol[i] = vp;
    rho[i] = r;
    const double gam = prm.nu * sig;
    eta += sig * gam * r * dt;
    iv += vp * dt;
    ivv += gam * gam * dt;
    const double w0 = g(rng);
    const double w1 = g(rng);
    const double w2 = g(rng);
    const double dx = r * w1 + std::sqrt((1.0 + r) * (1.0 - r)) * w2;
    p[i + 1] = p[i] + sig * sdt * dx;
    v = v + prm.alpha * (prm.beta - vp) * dt + gam * sdt * w1;
    r = r + (drift_level - prm.eta_mr * r) * dt + prm.theta * std::sqrt((1.0 + r) * (1.0 - r)) * sdt * w0;
    r = std::clamp(r, -edge, edge);
  }
  vol[n] = std::max(v, 0.0);
  rho[n] = r;

  TickSeries clean(detail::grid_times(grid), std::move(p), grid.horizon);
  const double nstd = noise_std_for(clean, noise);
  TickSeries noisy = add_noise(clean, noise, derive_seed(seed, 1));
  SimOutput out{std::move(clean), std::move(noisy), std::move(vol), std::move(rho),
                eta, iv, ivv, detail::ratio_or_zero(eta, iv, ivv), nstd, seed};
  return out;
}

//---------------------------------------------------------------------------
// Serialization: columnar CSV plus a JSON sidecar of truths
//---------------------------------------------------------------------------

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_sim_csv(const SimOutput& sim, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "timestamp,clean_logprice,noisy_logprice,sigma2\n";
  const auto t = sim.clean_series.timestamps();
  const auto pc = sim.clean_series.log_prices();
  const auto pn = sim.noisy_series.log_prices();
  for (std::size_t i = 0; i < t.size(); ++i)
    os << format_double(t[i]) << ',' << format_double(pc[i]) << ',' << format_double(pn[i]) << ','
       << format_double(sim.vol_path[i]) << '\n';
  if (!os) throw IoError("write failed for " + path.string());
}

inline nlohmann::json sim_truths_json(const SimOutput& sim) {
  return {{"true_eta", sim.true_eta}, {"true_iv", sim.true_iv}, {"true_ivv", sim.true_ivv},
          {"true_rt", sim.true_rt},   {"noise_std", sim.noise_std}, {"seed", sim.seed},
          {"steps", sim.clean_series.size()}, {"horizon", sim.clean_series.horizon()}};
}

/// Columns of a simulation CSV as read back.
struct SimCsv {
  std::vector<double> timestamps;
  std::vector<double> clean;
  std::vector<double> noisy;
  std::vector<double> sigma2;
};

inline SimCsv read_sim_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line) || line.rfind("timestamp,clean_logprice,noisy_logprice,sigma2", 0) != 0)
    throw DataError(path.string() + ": not a simulation CSV (bad header)");
  SimCsv out;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    double v[4];
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &v[0], &v[1], &v[2], &v[3]) != 4)
      throw DataError(path.string() + ": malformed row " + std::to_string(row));
    out.timestamps.push_back(v[0]);
    out.clean.push_back(v[1]);
    out.noisy.push_back(v[2]);
    out.sigma2.push_back(v[3]);
  }
  return out;
}

}  // namespace slev
