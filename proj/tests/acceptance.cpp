// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. `--full` adds the optional full-scale variance-reduction run.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "slev/cli.hpp"
#include "slev/slev.hpp"
#include "test_support.hpp"

using namespace slev;

namespace {

constexpr std::uint64_t kSeed = 20240601;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct TripleSum {
  double value = 0.0;
  double abs_terms = 0.0;  // sum of |D'_N d_i d_j d_k| (|D_M| <= 1): the rounding scale
};

TripleSum distinct_triple_sum(const TickSeries& s, CutFrequencies cut) {
  const auto t = s.timestamps();
  const auto d = s.returns();
  const double T = s.horizon();
  const std::size_t n = d.size();
  TripleSum acc;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dm = dirichlet(cut.M, t[i] - t[j], T);
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        const double term = dm * dirichlet_derivative(cut.N, t[k] - t[j], T) * d[i] * d[j] * d[k];
        acc.value += term;
        acc.abs_terms += std::abs(dirichlet_derivative(cut.N, t[k] - t[j], T) * d[i] * d[j] * d[k]);
      }
    }
  return acc;
}

TickSeries pure_noise(std::size_t n, NoiseKind kind, double sd, std::uint64_t seed) {
  return TickSeries::equidistant(draw_shocks(kind, sd, false, n + 1, seed), 1.0);
}

// 1
Outcome cross_form() {
  std::mt19937_64 rng(kSeed);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng() % 198;
    const CutFrequencies cut{1 + static_cast<int>(rng() % 30), 1 + static_cast<int>(rng() % 10)};
    const auto s = testing::random_walk(n, rng(), 1.0, 0.01, trial % 2 == 0);
    worst = std::max(worst, testing::rel_diff(fel_spectral(s, cut).value, fel_triple_sum(s, cut).value));
  }
  return {worst < 1e-9, fmt("max relative difference %.2e over 200 paths (tol 1e-9)", worst)};
}

// 2
// Relative error against the loop. When the loop value is zero to working
// precision (on a regular grid with n = 2M + 1 every D_M(t_i - t_j), i != j,
// vanishes) the error is measured on the scale sum |D'_N d d d| instead.
Outcome upsilon_oracle() {
  std::mt19937_64 rng(kSeed + 1);
  double worst = 0.0;
  int exact_zero = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + rng() % 98;
    const CutFrequencies cut{1 + static_cast<int>(rng() % 30), 1 + static_cast<int>(rng() % 10)};
    const auto s = testing::random_walk(n, rng(), 1.0, 0.01, trial % 2 == 0);
    const auto ref = distinct_triple_sum(s, cut);
    const double u = upsilon(s, cut);
    if (std::abs(ref.value) <= 1e-13 * ref.abs_terms) {
      ++exact_zero;
      worst = std::max(worst, std::abs(u - ref.value) / ref.abs_terms);
    } else {
      worst = std::max(worst, testing::rel_diff(u, ref.value));
    }
  }
  return {worst < 1e-9, fmt("max relative difference %.2e over 50 cases, %d with an exactly-zero sum measured against "
                            "sum |D'_N d d d| (tol 1e-9)",
                            worst, exact_zero)};
}

// 3
Outcome kernel_norms() {
  const double T = 1.0;
  double worst = 0.0;
  for (int N : {1, 5, 20, 50}) {
    // Composite Simpson on D_N^2 over [0, T].
    const int k = 40000;
    const double h = T / k;
    double acc = 0.0;
    for (int i = 0; i <= k; ++i) {
      const double w = (i == 0 || i == k) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      acc += w * std::pow(dirichlet(N, i * h, T), 2);
    }
    worst = std::max(worst, testing::rel_diff(acc * h / 3.0, T / (2.0 * N + 1.0)));
  }
  return {worst < 1e-6, fmt("max relative error %.2e for N in {1,5,20,50} (tol 1e-6)", worst)};
}

// 4
Outcome consistency() {
  const std::size_t reps = 200;
  const std::size_t fine = 21600;
  const std::size_t ns[3] = {5400, 10800, 21600};
  std::vector<std::array<double, 3>> err(reps);
  parallel_for(reps, 0, [&](std::size_t r) {
    SimScenario sc;
    sc.grid = {fine, 0.05};
    sc.noise.kind = NoiseKind::none;
    const auto sim = simulate_scenario(sc, derive_seed(kSeed, r));
    for (int k = 0; k < 3; ++k) {
      sc.observe_every = fine / ns[k];
      const auto obs = observed_series(sc, sim);
      err[r][k] = fel_spectral(obs, consistency_schedule(ns[k])).value - sim.true_eta;
    }
  });
  double rmse[3];
  for (int k = 0; k < 3; ++k) {
    double acc = 0.0;
    for (const auto& e : err) acc += e[k] * e[k];
    rmse[k] = std::sqrt(acc / reps);
  }
  const auto c0 = consistency_schedule(ns[0]), c1 = consistency_schedule(ns[1]), c2 = consistency_schedule(ns[2]);
  return {rmse[0] > rmse[1] && rmse[1] > rmse[2],
          fmt("RMSE %.4e (n=5400, M=%d N=%d) > %.4e (n=10800, M=%d N=%d) > %.4e (n=21600, M=%d N=%d), 200 reps", rmse[0],
              c0.M, c0.N, rmse[1], c1.M, c1.N, rmse[2], c2.M, c2.N)};
}

// 5
Outcome noise_bias() {
  const std::size_t n = 2000, reps = 2000;
  const CutFrequencies cut{50, 3};
  const double sd = 1e-3;
  std::string detail;
  bool ok = true;
  for (NoiseKind kind : {NoiseKind::shifted_exponential, NoiseKind::gaussian}) {
    std::vector<double> v(reps);
    parallel_for(reps, 0, [&](std::size_t r) {
      v[r] = fel_spectral(pure_noise(n, kind, sd, derive_seed(kSeed + 5, r + (kind == NoiseKind::gaussian) * reps)), cut)
                 .value;
    });
    const double target = noise_bias_analytic(n, cut, shock_moments(kind, sd).m3, 1.0);
    const double mu = stats::mean(v), se = stats::standard_error(v);
    const double z = (mu - target) / se;
    ok = ok && std::abs(z) < 3.0;
    detail += fmt("%s mean %.4e vs %.4e (%.2f SE); ", to_string(kind).c_str(), mu, target, z);
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

// 6
Outcome upsilon_zero_mean() {
  const std::size_t days = 1000;
  const CutFrequencies cut = consistency_schedule(5400);
  std::vector<double> v(days);
  parallel_for(days, 0, [&](std::size_t r) {
    SimScenario sc;
    const auto sim = simulate_scenario(sc, derive_seed(kSeed + 6, r));
    v[r] = upsilon(sim.noisy_series, cut);
  });
  const double mu = stats::mean(v), se = stats::standard_error(v);
  return {std::abs(mu) < 3.0 * se,
          fmt("mean %.3e, SE %.3e (%.2f SE) over 1000 noisy Heston days, n=5400, (M,N)=(%d,%d)", mu, se, mu / se, cut.M,
              cut.N)};
}

ExperimentReport desk_experiment(ModelKind model, std::size_t days, std::uint64_t seed, std::size_t steps = 5400) {
  ExperimentConfig cfg;
  cfg.scenario.model = model;
  cfg.scenario.grid = {steps, 0.05};
  cfg.days = days;
  cfg.seed = seed;
  return run_experiment(cfg);
}

// 7
Outcome variance_reduction(const ExperimentReport& h, const ExperimentReport& gh) {
  bool ok = true;
  std::string detail;
  for (const auto* rep : {&h, &gh}) {
    const auto* plain = rep->find("fel_mse");
    const auto* star = rep->find("fel_star_mse");
    const auto* starv = rep->find("fel_star_variance");
    if (!plain || !star || !starv) return {false, "corrected procedure skipped"};
    const double lambda = *starv->lambda;
    const bool good = star->error.mse < plain->error.mse && lambda >= 0.35 && lambda <= 0.95;
    ok = ok && good;
    detail += fmt("%s: MSE(eta*) %.3e vs MSE(eta~) %.3e, lambda %.3f; ", rep == &h ? "Heston" : "GH", star->error.mse,
                  plain->error.mse, lambda);
  }
  detail += "50 days, n=5400";
  return {ok, detail};
}

// 8
Outcome mse_var(const ExperimentReport& h) {
  double worst = -1e300;
  for (const char* name : {"fel_mse", "fel_star_mse"}) {
    const auto* s = h.find(name);
    if (!s) return {false, std::string(name) + " missing"};
    worst = std::max(worst, (s->error.mse - s->var) / s->error.mse);
  }
  return {worst <= 0.15, fmt("max (MSE-VAR)/MSE = %.3f over eta~ and eta* at the MSE cells (tol 0.15)", worst)};
}

// 9
Outcome fev_sanity(const ExperimentReport& h) {
  SimScenario sc;
  sc.noise.kind = NoiseKind::none;
  const auto sim = simulate_scenario(sc, derive_seed(kSeed + 9, 0));
  const auto& s = sim.clean_series;
  double rv = 0.0;
  for (double d : s.returns()) rv += d * d;
  const double f = fev(s, static_cast<int>(s.size() / 2));
  const double rel = std::abs(f - rv) / rv;
  const auto* tuned = h.find("fev");
  const int m_hat = tuned ? tuned->M : 0;
  const int nyq = static_cast<int>(h.n / 2);
  const bool ok = rel < 0.01 && tuned && m_hat * 5 <= nyq;
  return {ok, fmt("noiseless FEV/RV - 1 = %.2e at M=n/2 (tol 1e-2); noisy tuned M^=%d vs n/2=%d (need <= n/10)", rel,
                  m_hat, nyq)};
}

// 10
Outcome rt_recovery() {
  const auto h = desk_experiment(ModelKind::heston, 100, kSeed + 10);
  const auto gh = desk_experiment(ModelKind::gen_heston, 100, kSeed + 10);
  std::vector<double> rh, rg, tg;
  for (const auto& d : h.rt)
    if (std::isfinite(d.rt_tilde)) rh.push_back(d.rt_tilde);
  for (const auto& d : gh.rt)
    if (std::isfinite(d.rt_tilde)) {
      rg.push_back(d.rt_tilde);
      tg.push_back(d.true_rt);
    }
  const double mh = stats::mean(rh);
  const double corr = stats::correlation(rg, tg);
  const bool ok = mh >= -0.35 && mh <= -0.05 && corr > 0.3;
  return {ok, fmt("Heston mean R~_T %.3f (SE %.3f, need [-0.35,-0.05]); GH corr(R~_T, true) %.3f (need > 0.3); 100 "
                  "days each, n=5400",
                  mh, stats::standard_error(rh), corr)};
}

// 11
Outcome noise_moments() {
  const std::size_t reps = 1000000;
  const double sd = 0.5;
  double worst = 0.0;
  for (NoiseKind kind : {NoiseKind::gaussian, NoiseKind::shifted_exponential}) {
    const auto z = draw_shocks(kind, sd, false, 5 * reps, kSeed + 11);
    const auto m = noise_increment_moments(shock_moments(kind, sd));
    // E[eps^2], E[eps^4], E[eps_i^2 eps_{i+-1}], E[eps_j^2 eps_i^2], E[eps_j^4 eps_i^2] (far and adjacent).
    const double expect[9] = {m.e2,           m.e4,           m.sq_next,           m.sq_prev,           m.sq_sq_far,
                              m.sq_sq_adjacent, m.quartic_sq_far, m.quartic_sq_adjacent, m.quartic_sq_adjacent};
    std::vector<std::vector<double>> smp(9, std::vector<double>(reps));
    for (std::size_t r = 0; r < reps; ++r) {
      const double* s = &z[5 * r];
      const double e0 = s[1] - s[0], e1 = s[2] - s[1], e3 = s[4] - s[3];
      smp[0][r] = e1 * e1;
      smp[1][r] = std::pow(e1, 4);
      smp[2][r] = e0 * e0 * e1;
      smp[3][r] = e1 * e1 * e0;
      smp[4][r] = e1 * e1 * e3 * e3;
      smp[5][r] = e0 * e0 * e1 * e1;
      smp[6][r] = std::pow(e3, 4) * e1 * e1;
      smp[7][r] = std::pow(e1, 4) * e0 * e0;
      smp[8][r] = std::pow(e0, 4) * e1 * e1;
    }
    for (int k = 0; k < 9; ++k) {
      const double se = stats::standard_error(smp[k]);
      worst = std::max(worst, std::abs(stats::mean(smp[k]) - expect[k]) / se);
    }
  }
  return {worst < 4.0, fmt("max |MC - identity| = %.2f SE over 9 moments x 2 noise kinds, 1e6 draws (tol 4 SE)", worst)};
}

// 12
// The pass rule uses fixed (M, N) = (50, 3). The ratio with M = n/4 is
// printed alongside for context only.
Outcome divergence() {
  const std::size_t reps = 1000;
  const std::size_t ns[2] = {1000, 4000};
  double var[2], var_prop[2];
  for (int k = 0; k < 2; ++k) {
    std::vector<double> v(reps), w(reps);
    parallel_for(reps, 0, [&](std::size_t r) {
      const auto s = pure_noise(ns[k], NoiseKind::gaussian, 1e-3, derive_seed(kSeed + 12 + k, r));
      const SpectralCache cache(s, static_cast<int>(ns[k] / 4) + 3);
      v[r] = fel_spectral(cache, {50, 3}).value;
      w[r] = fel_spectral(cache, {static_cast<int>(ns[k] / 4), 3}).value;
    });
    var[k] = stats::sample_variance(v);
    var_prop[k] = stats::sample_variance(w);
  }
  return {var[1] > 2.0 * var[0],
          fmt("Var(n=4000)/Var(n=1000) = %.3f at (M,N)=(50,3) (need > 2), 1000 reps; for reference %.2f at M=n/4, N=3",
              var[1] / var[0], var_prop[1] / var_prop[0])};
}

// 13
Outcome scale_equivariance() {
  SimScenario sc;
  const auto sim = simulate_scenario(sc, derive_seed(kSeed + 13, 0));
  const auto& s = sim.noisy_series;
  const CutFrequencies lev{200, 2}, fvv{100, 3};
  const int mf = 500;
  double worst = 0.0;
  for (double c : {0.37, 3.0, 11.5}) {
    const auto t = s.with_scaled_returns(c);
    worst = std::max(worst, testing::rel_diff(fel_spectral(t, lev).value, c * c * c * fel_spectral(s, lev).value));
    worst = std::max(worst, testing::rel_diff(fev(t, mf), c * c * fev(s, mf)));
    worst = std::max(worst, testing::rel_diff(fevv(t, fvv), c * c * c * c * fevv(s, fvv)));
    worst = std::max(worst, testing::rel_diff(rt_estimate(t, lev, mf, fvv).value, rt_estimate(s, lev, mf, fvv).value));
  }
  return {worst <= 1e-12, fmt("max relative deviation %.2e for c in {0.37, 3, 11.5} (tol 1e-12)", worst)};
}

// 14
Outcome plumbing() {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "slev_acceptance_e2e";
  fs::remove_all(dir);
  std::ostringstream sink_out, sink_err;
  auto run = [&](std::vector<std::string> args) {
    args.insert(args.begin(), "slev");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::run(static_cast<int>(argv.size()), argv.data(), sink_out, sink_err);
  };
  std::vector<std::string> sets{"scenario.model=gen_heston",
                                "scenario.steps=2000",
                                "scenario.price_roundtrip=true",
                                "grid.fel.m_values=[25,50,100,200]",
                                "grid.fel.n_values=[1,2,3]",
                                "grid.fev.m_values=[100,300,1000]",
                                "grid.fevv.m_values=[25,50]",
                                "grid.fevv.n_values=[2,3]",
                                "tune.days=12",
                                "mc.days=12",
                                "empirical.synthetic.days=12",
                                "empirical.min_replications=10"};
  auto with = [&](std::vector<std::string> head, const std::string& sub) {
    head.push_back("--out");
    head.push_back((dir / sub).string());
    for (const auto& s : sets) {
      head.push_back("--set");
      head.push_back(s);
    }
    return head;
  };
  int codes[5];
  codes[0] = run(with({"simulate"}, "simulate"));
  codes[1] = run({"estimate", (dir / "simulate" / "sim.csv").string(), "--estimator", "rt"});
  codes[2] = run(with({"tune"}, "tune"));
  codes[3] = run(with({"mc"}, "mc"));
  codes[4] = run(with({"empirical"}, "empirical"));
  bool ok = true;
  for (int c : codes) ok = ok && c == 0;

  // Day values of the empirical pipeline against mc_harness on the same days.
  double worst = 0.0;
  std::size_t days = 0;
  try {
    const auto cfg = resolve_config(std::nullopt, sets);
    auto ec = cfg.experiment;
    ec.days = 12;
    const auto recs = simulate_days(ec, cfg.grids);
    SessionSpec spec;
    spec.open_seconds = cfg.synthetic_open;
    spec.close_seconds = cfg.synthetic_open + 2000.0;
    const auto loaded = load_sessions(dir / "empirical" / "synthetic_ticks.csv", spec);
    const double a = 2000.0 / 0.05;
    days = loaded.sessions.size();
    for (std::size_t i = 0; i < std::min(days, recs.size()); ++i) {
      const auto m = evaluate_day(loaded.sessions[i].series, cfg.grids);
      const auto& r = recs[i].values;
      for (std::size_t c = 0; c < r.fel.size(); ++c) {
        worst = std::max(worst, testing::rel_diff(m.fel[c] * a, r.fel[c]));
        worst = std::max(worst, testing::rel_diff(m.upsilon[c] * a, r.upsilon[c]));
      }
      for (std::size_t c = 0; c < r.fev.size(); ++c) worst = std::max(worst, testing::rel_diff(m.fev[c], r.fev[c]));
      for (std::size_t c = 0; c < r.fevv.size(); ++c)
        worst = std::max(worst, testing::rel_diff(m.fevv[c] * a * a, r.fevv[c]));
    }
  } catch (const std::exception& e) {
    fs::remove_all(dir);
    return {false, std::string("equivalence check threw: ") + e.what()};
  }
  fs::remove_all(dir);
  ok = ok && days == 12 && worst <= 1e-12;
  return {ok, fmt("exit codes simulate/estimate/tune/mc/empirical = %d/%d/%d/%d/%d; empirical vs mc day values max "
                  "relative difference %.2e over %zu days (tol 1e-12)",
                  codes[0], codes[1], codes[2], codes[3], codes[4], worst, days)};
}

Outcome full_scale() {
  const auto h = desk_experiment(ModelKind::heston, 100, kSeed + 7, 21600);
  const auto gh = desk_experiment(ModelKind::gen_heston, 100, kSeed + 7, 21600);
  const auto* sh = h.find("fel_star_variance");
  const auto* sg = gh.find("fel_star_variance");
  if (!sh || !sg) return {false, "corrected procedure skipped"};
  const double lh = *sh->lambda, lg = *sg->lambda;
  return {lh >= 0.35 && lh <= 0.85 && lg >= 0.6 && lg <= 1.0,
          fmt("lambda Heston %.3f (need [0.35,0.85]), GH %.3f (need [0.6,1.0]); 100 days, n=21600", lh, lg)};
}

}  // namespace

int main(int argc, char** argv) {
  bool full = false;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--full") {
      full = true;
    } else {
      std::fprintf(stderr, "usage: %s [--full]\n", argv[0]);
      return 2;
    }
  }
  int failed = 0, total = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ++total;
    failed += !o.pass;
    std::printf("[%s] %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
    std::fflush(stdout);
  };

  report(1, "cross-form exactness", cross_form);
  report(2, "Upsilon oracle", upsilon_oracle);
  report(3, "kernel norms", kernel_norms);
  report(4, "noiseless consistency", consistency);
  report(5, "analytic noise bias", noise_bias);
  report(6, "Upsilon zero mean", upsilon_zero_mean);
  std::fprintf(stderr, "running the 50-day desk experiments...\n");
  const auto h = desk_experiment(ModelKind::heston, 50, kSeed + 7);
  const auto gh = desk_experiment(ModelKind::gen_heston, 50, kSeed + 7);
  report(7, "variance reduction", [&] { return variance_reduction(h, gh); });
  report(8, "MSE ~ VAR structure", [&] { return mse_var(h); });
  report(9, "FEV sanity", [&] { return fev_sanity(h); });
  report(10, "R_T recovery", rt_recovery);
  report(11, "noise-moment identities", noise_moments);
  report(12, "MSE divergence signature", divergence);
  report(13, "scale equivariance", scale_equivariance);
  report(14, "end-to-end plumbing", plumbing);
  if (full) report(15, "full-scale variance reduction (optional)", full_scale);
  std::printf("acceptance: %d/%d passed\n", total - failed, total);
  return failed == 0 ? 0 : 1;
}
