#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "slev/errors.hpp"
#include "slev/estimators.hpp"
#include "slev/parallel.hpp"
#include "slev/sde_lab.hpp"
#include "slev/stats.hpp"
#include "slev/tuning.hpp"

namespace slev {

//---------------------------------------------------------------------------
// Scenario
//---------------------------------------------------------------------------

enum class ModelKind { heston, gen_heston };

inline std::string to_string(ModelKind m) { return m == ModelKind::heston ? "heston" : "gen_heston"; }

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "heston") return ModelKind::heston;
  if (s == "gen_heston" || s == "gh") return ModelKind::gen_heston;
  throw InvalidInput("unknown model '" + s + "' (expected heston or gen_heston)");
}

struct SimScenario {
  ModelKind model = ModelKind::heston;
  HestonParams heston;
  GenHestonParams gen_heston;
  SimGrid grid{5400, 0.05};
  NoiseConfig noise{NoiseKind::gaussian, 0.8};
  /// Keep every k-th simulated observation; truths stay on the fine grid.
  std::size_t observe_every = 1;
  /// Observe log(exp(p)) as a price file would carry it.
  bool price_roundtrip = false;

  void validate() const {
    if (model == ModelKind::heston)
      heston.validate();
    else
      gen_heston.validate();
    grid.validate();
    noise.validate();
    if (observe_every < 1) throw InvalidInput("observe_every must be >= 1");
    if (grid.steps % observe_every != 0) throw InvalidInput("observe_every must divide the number of steps");
    if (grid.steps / observe_every < 3) throw InvalidInput("fewer than 3 observed returns per day");
  }

  /// Returns per observed day.
  std::size_t observed_n() const { return grid.steps / observe_every; }
};

inline SimOutput simulate_scenario(const SimScenario& sc, std::uint64_t seed) {
  return sc.model == ModelKind::heston ? simulate_heston(sc.heston, sc.grid, seed, sc.noise)
                                       : simulate_gen_heston(sc.gen_heston, sc.grid, seed, sc.noise);
}

/// The noisy series as the estimators see it.
inline TickSeries observed_series(const SimScenario& sc, const SimOutput& sim) {
  const auto& s = sim.noisy_series;
  if (sc.observe_every == 1 && !sc.price_roundtrip) return s;
  std::vector<double> t, p;
  for (std::size_t i = 0; i < s.observations(); i += sc.observe_every) {
    t.push_back(s.timestamps()[i]);
    p.push_back(sc.price_roundtrip ? std::log(std::exp(s.log_prices()[i])) : s.log_prices()[i]);
  }
  return TickSeries(std::move(t), std::move(p), s.horizon());
}

//---------------------------------------------------------------------------
// Per-day evaluation over the tuning grids
//---------------------------------------------------------------------------

/// FEL / Upsilon over fel, FEV over fev (M only), FEVV over fevv (N >= 2).
struct EstimationGrids {
  GridSpec fel;
  GridSpec fev;
  GridSpec fevv;

  void validate() const {
    fel.validate();
    fev.validate();
    fevv.validate(2);
  }
  int max_freq() const { return std::max({fel.max_freq(), fev.max_m(), fevv.max_freq()}); }

  /// Defaults for n returns per day: the standard FEL grid, FEV over
  /// 24 log-spaced M up to the Nyquist frequency, FEVV over the FEL M values
  /// with N = 2..6.
  static EstimationGrids defaults(std::size_t n) {
    EstimationGrids g;
    g.fel = GridSpec::defaults(n);
    g.fev.m_values = GridSpec::log_spaced(std::max(1, static_cast<int>(std::ceil(n / 256.0))),
                                          std::max(1, static_cast<int>(n / 2)), 24);
    g.fev.n_values = {1};
    g.fevv.m_values = g.fel.m_values;
    g.fevv.n_values = {2, 3, 4, 5, 6};
    return g;
  }
};

struct DayValues {
  std::vector<double> fel;
  std::vector<double> upsilon;
  std::vector<double> fev;
  std::vector<double> fevv;

  bool finite() const {
    for (const auto* v : {&fel, &upsilon, &fev, &fevv})
      for (double x : *v)
        if (!std::isfinite(x)) return false;
    return true;
  }
};

/// One cache of return spectra, every grid cell evaluated from it.
inline DayValues evaluate_day(const TickSeries& s, const EstimationGrids& g) {
  const SpectralCache cache(s, g.max_freq());
  DayValues d;
  d.fel.resize(g.fel.cells());
  d.upsilon.resize(g.fel.cells());
  evaluate_fel_cells(cache, g.fel, d.fel, d.upsilon);
  d.fev.resize(g.fev.m_values.size());
  for (std::size_t i = 0; i < g.fev.m_values.size(); ++i) d.fev[i] = fev(cache, g.fev.m_values[i]);
  d.fevv.resize(g.fevv.cells());
  const int nmax = g.fevv.max_n();
  for (std::size_t im = 0; im < g.fevv.m_values.size(); ++im) {
    const auto vol = volatility_coefficients(cache.returns(), g.fevv.m_values[im], nmax);
    for (std::size_t in = 0; in < g.fevv.n_values.size(); ++in)
      d.fevv[im * g.fevv.n_values.size() + in] = fevv_from_vol(vol, g.fevv.n_values[in]);
  }
  return d;
}

struct Truths {
  double eta = 0.0;
  double iv = 0.0;
  double ivv = 0.0;
  double rt = 0.0;
};

struct DayRecord {
  std::size_t day = 0;
  std::uint64_t seed = 0;
  Truths truth;
  DayValues values;
};

//---------------------------------------------------------------------------
// Experiment
//---------------------------------------------------------------------------

enum class Estimator { fel, fel_star, fev, fevv, rt, rt_star };

inline std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::fel: return "fel";
    case Estimator::fel_star: return "fel_star";
    case Estimator::fev: return "fev";
    case Estimator::fevv: return "fevv";
    case Estimator::rt: return "rt";
    case Estimator::rt_star: return "rt_star";
  }
  return "fel";
}

inline Estimator parse_estimator(const std::string& s) {
  for (Estimator e : {Estimator::fel, Estimator::fel_star, Estimator::fev, Estimator::fevv, Estimator::rt,
                      Estimator::rt_star})
    if (to_string(e) == s) return e;
  throw InvalidInput("unknown estimator '" + s + "'");
}

struct ExperimentConfig {
  SimScenario scenario;
  std::size_t days = 50;
  /// Empty grids are replaced by EstimationGrids::defaults(n).
  std::optional<EstimationGrids> grids;
  std::vector<Estimator> estimators{Estimator::fel, Estimator::fel_star, Estimator::fev,
                                    Estimator::fevv, Estimator::rt,      Estimator::rt_star};
  std::optional<std::filesystem::path> out_dir;
  std::uint64_t seed = 20240601;
  unsigned threads = 0;
  std::size_t min_replications = 10;

  EstimationGrids resolved_grids() const {
    auto g = grids ? *grids : EstimationGrids::defaults(scenario.observed_n());
    g.fel.min_replications = min_replications;
    return g;
  }

  bool wants(Estimator e) const { return std::find(estimators.begin(), estimators.end(), e) != estimators.end(); }

  void validate() const {
    scenario.validate();
    if (days < 2) throw InvalidInput("experiment needs days >= 2");
    const auto g = resolved_grids();
    g.validate();
    if (g.max_freq() > static_cast<int>(scenario.observed_n()) * 4)
      throw InvalidInput("grid frequencies far beyond the number of observations");
  }
};

/// Population-moment pieces of MSE = var(e) + bias^2 + var(t) - 2 cov(e, t).
struct ErrorDecomposition {
  double mse = 0.0;
  double bias = 0.0;
  double var_est = 0.0;
  double var_truth = 0.0;
  double cov = 0.0;

  double recomposed() const { return var_est + bias * bias + var_truth - 2.0 * cov; }
};

inline ErrorDecomposition decompose(std::span<const double> est, std::span<const double> truth) {
  return {stats::mse(est, truth), stats::bias(est, truth), stats::population_variance(est),
          stats::population_variance(truth), stats::population_covariance(est, truth)};
}

/// One estimator at its selected cell.
struct EstimatorSummary {
  std::string name;       // e.g. fel_mse, fel_star_variance, fev, fevv
  std::string estimator;  // fel, fel_star, fev, fevv
  Objective objective = Objective::mse;
  int M = 0;
  int N = 0;  // 0 when not applicable (FEV)
  double mean = 0.0;
  double var = 0.0;  // sample variance, (d-1)
  ErrorDecomposition error;
  std::optional<double> lambda;
  std::vector<double> values;
  std::vector<double> truths;
};

struct RtDay {
  std::size_t day = 0;
  double true_rt = 0.0;
  double rt_tilde = std::numeric_limits<double>::quiet_NaN();
  double rt_star = std::numeric_limits<double>::quiet_NaN();
};

struct RtCuts {
  CutFrequencies lev;
  int m_fev = 0;
  CutFrequencies fevv;
};

struct ExperimentReport {
  std::size_t days_total = 0;
  std::size_t days_used = 0;
  std::size_t days_excluded = 0;
  std::vector<std::size_t> excluded_days;
  double eta_bar = 0.0;
  double iv_bar = 0.0;
  double ivv_bar = 0.0;
  double rt_bar = 0.0;
  std::size_t n = 0;
  std::map<std::string, TuningResult> tuning;  // key "<estimator>_<objective>"
  std::vector<EstimatorSummary> summaries;
  std::optional<std::string> corrected_skipped;  // reason, when fel_star was not computed
  std::vector<RtDay> rt;
  std::optional<RtCuts> rt_cuts;
  std::size_t rt_missing = 0;
  double runtime_seconds = 0.0;
  std::uint64_t seed = 0;
  std::vector<DayRecord> records;  // used days, in day order

  const EstimatorSummary* find(const std::string& name) const {
    for (const auto& s : summaries)
      if (s.name == name) return &s;
    return nullptr;
  }
};

/// Simulates and evaluates every day. Day i uses derive_seed(master, i), so
/// results do not depend on the thread count.
inline std::vector<DayRecord> simulate_days(const ExperimentConfig& cfg, const EstimationGrids& g) {
  std::vector<DayRecord> out(cfg.days);
  parallel_for(cfg.days, cfg.threads, [&](std::size_t i) {
    const std::uint64_t seed = derive_seed(cfg.seed, i);
    const auto sim = simulate_scenario(cfg.scenario, seed);
    out[i].day = i;
    out[i].seed = seed;
    out[i].truth = {sim.true_eta, sim.true_iv, sim.true_ivv, sim.true_rt};
    out[i].values = evaluate_day(observed_series(cfg.scenario, sim), g);
  });
  return out;
}

namespace detail {

inline EstimatorSummary summarize(std::string name, std::string estimator, Objective obj, int M, int N,
                                  std::vector<double> values, std::vector<double> truths) {
  EstimatorSummary s;
  s.name = std::move(name);
  s.estimator = std::move(estimator);
  s.objective = obj;
  s.M = M;
  s.N = N;
  s.mean = stats::mean(values);
  s.var = stats::sample_variance(values);
  s.error = decompose(values, truths);
  s.values = std::move(values);
  s.truths = std::move(truths);
  return s;
}

inline std::size_t cell_index(const GridSpec& g, int M, int N) {
  const auto im = static_cast<std::size_t>(std::find(g.m_values.begin(), g.m_values.end(), M) - g.m_values.begin());
  const auto in = static_cast<std::size_t>(std::find(g.n_values.begin(), g.n_values.end(), N) - g.n_values.begin());
  return im * g.n_values.size() + in;
}

}  // namespace detail

/// Tuning and aggregates over already-evaluated days.
inline ExperimentReport analyze_days(std::vector<DayRecord> records, const EstimationGrids& g,
                                     std::size_t min_replications = 10) {
  ExperimentReport rep;
  rep.days_total = records.size();
  std::vector<DayRecord> used;
  for (auto& r : records) {
    if (r.values.finite() && std::isfinite(r.truth.eta))
      used.push_back(std::move(r));
    else
      rep.excluded_days.push_back(r.day);
  }
  rep.days_used = used.size();
  rep.days_excluded = rep.excluded_days.size();
  if (used.size() < 2) throw DegenerateControl("fewer than 2 usable days after exclusions");
  const std::size_t d = used.size();

  Matrix fel(d, g.fel.cells()), ups(d, g.fel.cells()), fevm(d, g.fev.m_values.size()), fevvm(d, g.fevv.cells());
  std::vector<double> t_eta(d), t_iv(d), t_ivv(d), t_rt(d);
  for (std::size_t r = 0; r < d; ++r) {
    std::copy(used[r].values.fel.begin(), used[r].values.fel.end(), fel.row(r).begin());
    std::copy(used[r].values.upsilon.begin(), used[r].values.upsilon.end(), ups.row(r).begin());
    std::copy(used[r].values.fev.begin(), used[r].values.fev.end(), fevm.row(r).begin());
    std::copy(used[r].values.fevv.begin(), used[r].values.fevv.end(), fevvm.row(r).begin());
    t_eta[r] = used[r].truth.eta;
    t_iv[r] = used[r].truth.iv;
    t_ivv[r] = used[r].truth.ivv;
    t_rt[r] = used[r].truth.rt;
  }
  rep.eta_bar = stats::mean(t_eta);
  rep.iv_bar = stats::mean(t_iv);
  rep.ivv_bar = stats::mean(t_ivv);
  rep.rt_bar = stats::mean(t_rt);

  for (Objective obj : {Objective::mse, Objective::variance}) {
    auto spec = g.fel;
    spec.objective = obj;
    spec.min_replications = min_replications;
    const auto plain = grid_search(fel, std::span<const double>(t_eta), spec);
    rep.summaries.push_back(detail::summarize("fel_" + to_string(obj), "fel", obj, plain.m_hat, plain.n_hat,
                                              plain.selected_estimates, t_eta));
    rep.tuning.emplace("fel_" + to_string(obj), plain);
    try {
      const auto corr = corrected_from_matrices(fel, ups, std::span<const double>(t_eta), spec);
      auto s = detail::summarize("fel_star_" + to_string(obj), "fel_star", obj, corr.m_hat, corr.n_hat,
                                 corr.selected_estimates, t_eta);
      s.lambda = corr.lambda;
      rep.summaries.push_back(std::move(s));
      rep.tuning.emplace("fel_star_" + to_string(obj), corr);
    } catch (const Error& e) {
      rep.corrected_skipped = e.what();
    }
  }

  auto fev_spec = g.fev;
  fev_spec.objective = Objective::mse;
  const auto fev_t = grid_search(fevm, std::span<const double>(t_iv), fev_spec);
  rep.summaries.push_back(
      detail::summarize("fev", "fev", Objective::mse, fev_t.m_hat, 0, fev_t.selected_estimates, t_iv));
  rep.tuning.emplace("fev_mse", fev_t);

  auto fevv_spec = g.fevv;
  fevv_spec.objective = Objective::mse;
  const auto fevv_t = grid_search(fevvm, std::span<const double>(t_ivv), fevv_spec);
  rep.summaries.push_back(
      detail::summarize("fevv", "fevv", Objective::mse, fevv_t.m_hat, fevv_t.n_hat, fevv_t.selected_estimates, t_ivv));
  rep.tuning.emplace("fevv_mse", fevv_t);

  // R_T: numerator at the variance-selected FEL cell, FEV / FEVV at their MSE cells.
  const auto& lev = rep.tuning.at("fel_variance");
  const auto star_it = rep.tuning.find("fel_star_variance");
  RtCuts cuts{lev.selected(), fev_t.m_hat, fevv_t.selected()};
  rep.rt_cuts = cuts;
  const std::size_t c_lev = detail::cell_index(g.fel, lev.m_hat, lev.n_hat);
  for (std::size_t r = 0; r < d; ++r) {
    RtDay day;
    day.day = used[r].day;
    day.true_rt = t_rt[r];
    const double fv = fev_t.selected_estimates[r];
    const double fvv = fevv_t.selected_estimates[r];
    try {
      day.rt_tilde = rt_ratio(fel(r, c_lev), fv, fvv);
      if (star_it != rep.tuning.end()) day.rt_star = rt_ratio(star_it->second.selected_estimates[r], fv, fvv);
    } catch (const DegenerateDenominator&) {
      ++rep.rt_missing;
    }
    rep.rt.push_back(day);
  }
  rep.records = std::move(used);
  return rep;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const auto g = cfg.resolved_grids();
  auto rep = analyze_days(simulate_days(cfg, g), g, cfg.min_replications);
  rep.n = cfg.scenario.observed_n();
  rep.seed = cfg.seed;
  rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

//---------------------------------------------------------------------------
// Output
//---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json json_number(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

inline std::string csv_number(double x) { return std::isfinite(x) ? format_double(x) : std::string("NA"); }

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw IoError("cannot open " + p.string() + " for writing");
  return os;
}

}  // namespace detail

inline nlohmann::json to_json(const ExperimentReport& rep, const ExperimentConfig* cfg = nullptr) {
  nlohmann::json j;
  j["days_total"] = rep.days_total;
  j["days_used"] = rep.days_used;
  j["days_excluded"] = rep.days_excluded;
  j["excluded_days"] = rep.excluded_days;
  j["n"] = rep.n;
  j["seed"] = rep.seed;
  j["truth_means"] = {{"eta", rep.eta_bar}, {"iv", rep.iv_bar}, {"ivv", rep.ivv_bar}, {"rt", rep.rt_bar}};
  nlohmann::json est = nlohmann::json::array();
  for (const auto& s : rep.summaries) {
    if (cfg && !cfg->wants(parse_estimator(s.estimator))) continue;
    nlohmann::json e{{"name", s.name},
                     {"estimator", s.estimator},
                     {"objective", to_string(s.objective)},
                     {"M", s.M},
                     {"N", s.N == 0 ? nlohmann::json(nullptr) : nlohmann::json(s.N)},
                     {"mean", s.mean},
                     {"var", s.var},
                     {"mse", s.error.mse},
                     {"bias", s.error.bias},
                     {"var_pop", s.error.var_est},
                     {"truth_var_pop", s.error.var_truth},
                     {"cov_pop", s.error.cov}};
    e["lambda"] = s.lambda ? nlohmann::json(*s.lambda) : nlohmann::json(nullptr);
    est.push_back(e);
  }
  j["estimators"] = est;
  nlohmann::json tun;
  for (const auto& [k, t] : rep.tuning) tun[k] = to_json(t);
  j["tuning"] = tun;
  j["corrected_skipped"] = rep.corrected_skipped ? nlohmann::json(*rep.corrected_skipped) : nlohmann::json(nullptr);
  if (rep.rt_cuts) {
    j["rt"] = {{"lev", {{"M", rep.rt_cuts->lev.M}, {"N", rep.rt_cuts->lev.N}}},
               {"fev_M", rep.rt_cuts->m_fev},
               {"fevv", {{"M", rep.rt_cuts->fevv.M}, {"N", rep.rt_cuts->fevv.N}}},
               {"missing_days", rep.rt_missing}};
    std::vector<double> a, b;
    for (const auto& d : rep.rt)
      if (std::isfinite(d.rt_tilde)) {
        a.push_back(d.rt_tilde);
        b.push_back(d.true_rt);
      }
    if (a.size() >= 2) {
      j["rt"]["mean_rt_tilde"] = stats::mean(a);
      j["rt"]["corr_rt_tilde_true"] = stats::correlation(a, b);
    }
  }
  return j;
}

inline void write_per_day_csv(const ExperimentReport& rep, std::ostream& os, const ExperimentConfig* cfg = nullptr) {
  os << "day,estimator,M,N,value,truth\n";
  for (const auto& s : rep.summaries) {
    if (cfg && !cfg->wants(parse_estimator(s.estimator))) continue;
    for (std::size_t i = 0; i < s.values.size(); ++i)
      os << rep.records[i].day << ',' << s.name << ',' << s.M << ',' << (s.N == 0 ? std::string("NA") : std::to_string(s.N))
         << ',' << format_double(s.values[i]) << ',' << format_double(s.truths[i]) << '\n';
  }
}

inline void write_rt_csv(const ExperimentReport& rep, std::ostream& os) {
  os << "day,true_rt,rt_tilde,rt_star\n";
  for (const auto& d : rep.rt)
    os << d.day << ',' << detail::csv_number(d.true_rt) << ',' << detail::csv_number(d.rt_tilde) << ','
       << detail::csv_number(d.rt_star) << '\n';
}

inline constexpr const char* experiment_readme = R"(Output of one Monte Carlo experiment.

report.json
  days_total, days_used, days_excluded, excluded_days: day accounting. Days
    with non-finite estimates are excluded from every aggregate.
  truth_means: mean true integrated leverage (eta), variance (iv),
    vol-of-vol (ivv) and ratio (rt) over used days.
  estimators[]: one entry per estimator at its selected cell.
    name: fel_mse, fel_variance, fel_star_mse, fel_star_variance, fev, fevv
    M, N: selected cutting frequencies (N is null for fev)
    mean, var: sample mean and (d-1) sample variance of the daily values
    mse, bias: mean squared error and mean error against the truth
    var_pop, truth_var_pop, cov_pop: population moments, so that
      mse = var_pop + bias^2 + truth_var_pop - 2 cov_pop
    lambda: Var(eta*) / Var(eta~) at the selected cell (fel_star only)
  tuning: full objective surfaces per estimator and objective.
  rt: cuts used for R_T and summary of the daily series.

per_day.csv
  day, estimator, M, N, value, truth
  One row per used day and estimator (same names as in report.json).

surface_<name>.csv
  M, N, objective[, b]
  Objective surface of one tuning run; b is the control-variate
  coefficient per cell for the corrected estimator.

rt_series.csv
  day, true_rt, rt_tilde, rt_star
  NA marks days whose R_T denominator was not positive.

config.json
  The fully resolved configuration of the run.
)";

inline void write_experiment(const ExperimentReport& rep, const ExperimentConfig& cfg, const std::filesystem::path& dir,
                             const nlohmann::json* resolved_config = nullptr) {
  std::filesystem::create_directories(dir);
  {
    auto os = detail::open_out(dir / "report.json");
    os << to_json(rep, &cfg).dump(2) << '\n';
  }
  {
    auto os = detail::open_out(dir / "per_day.csv");
    write_per_day_csv(rep, os, &cfg);
  }
  for (const auto& [k, t] : rep.tuning) {
    const std::string est = k.substr(0, k.rfind('_'));
    if (!cfg.wants(parse_estimator(est))) continue;
    auto os = detail::open_out(dir / ("surface_" + k + ".csv"));
    write_surface_csv(t, os);
  }
  if (cfg.wants(Estimator::rt) || cfg.wants(Estimator::rt_star)) {
    auto os = detail::open_out(dir / "rt_series.csv");
    write_rt_csv(rep, os);
  }
  {
    auto os = detail::open_out(dir / "README.txt");
    os << experiment_readme;
  }
  if (resolved_config) {
    auto os = detail::open_out(dir / "config.json");
    os << resolved_config->dump(2) << '\n';
  }
}

/// Runs one experiment and writes its files when cfg.out_dir is set.
inline ExperimentReport run_table_experiment(const ExperimentConfig& cfg) {
  auto rep = run_experiment(cfg);
  if (cfg.out_dir) write_experiment(rep, cfg, *cfg.out_dir);
  return rep;
}

/// Daily (true R_T, R~_T, R*_T).
inline std::vector<RtDay> run_rt_tracking(const ExperimentConfig& cfg) {
  auto rep = run_experiment(cfg);
  if (cfg.out_dir) {
    std::filesystem::create_directories(*cfg.out_dir);
    auto os = detail::open_out(*cfg.out_dir / "rt_series.csv");
    write_rt_csv(rep, os);
  }
  return rep.rt;
}

//---------------------------------------------------------------------------
// Sensitivity sweeps
//---------------------------------------------------------------------------

enum class SweepKind { theta, zeta };

struct SweepPoint {
  double value = 0.0;
  bool skipped = false;
  std::string reason;
  std::optional<ExperimentReport> report;
};

/// One experiment per sweep value on the generalized Heston model, all with
/// the same day seeds. A zeta value sets the mean-reversion speed to
/// eta = 2 xi / (zeta + 1) with xi fixed.
inline std::vector<SweepPoint> run_sensitivity(const ExperimentConfig& base, SweepKind kind,
                                               const std::vector<double>& values) {
  std::vector<SweepPoint> out;
  for (double v : values) {
    SweepPoint pt;
    pt.value = v;
    ExperimentConfig cfg = base;
    cfg.scenario.model = ModelKind::gen_heston;
    cfg.out_dir.reset();
    try {
      if (kind == SweepKind::theta) {
        cfg.scenario.gen_heston.theta = v;
      } else {
        if (!(v > -1.0) || !(v <= 1.0)) throw InvalidInput("zeta must lie in (-1, 1]");
        cfg.scenario.gen_heston.eta_mr = 2.0 * cfg.scenario.gen_heston.xi / (v + 1.0);
      }
      cfg.scenario.validate();
      pt.report = run_experiment(cfg);
    } catch (const InvalidInput& e) {
      pt.skipped = true;
      pt.reason = e.what();
    }
    out.push_back(std::move(pt));
  }
  return out;
}

}  // namespace slev
