#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "slev/config.hpp"
#include "slev/errors.hpp"
#include "slev/estimators.hpp"
#include "slev/market_data.hpp"
#include "slev/mc_harness.hpp"
#include "slev/sde_lab.hpp"
#include "slev/tuning.hpp"

namespace slev::cli {

enum ExitCode : int { ok = 0, config_error = 2, data_error = 3, degenerate = 4 };

inline int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::config: return config_error;
    case ErrorKind::degenerate: return degenerate;
    default: return data_error;
  }
}

inline const char* kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_input: return "invalid_input";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::config: return "config";
    case ErrorKind::data: return "data";
    case ErrorKind::io: return "io";
  }
  return "error";
}

struct GlobalOptions {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out;
  std::vector<std::string> sets;
};

struct EstimateOptions {
  std::string input;
  std::string estimator = "fel";
  std::string column = "noisy";
  std::optional<double> horizon;
  std::optional<int> M, N, fev_m, fevv_m, fevv_n, ups_m, ups_n;
  std::optional<double> b;
  std::optional<double> truth;
};

namespace detail {

inline RunConfig resolve(const GlobalOptions& g) {
  auto sets = g.sets;
  if (g.seed) sets.push_back("seed=" + std::to_string(*g.seed));
  if (g.threads) sets.push_back("threads=" + std::to_string(*g.threads));
  if (g.out) sets.push_back("out=" + nlohmann::json(*g.out).dump());
  std::optional<std::filesystem::path> file;
  if (g.config) file = *g.config;
  return resolve_config(file, sets);
}

inline std::filesystem::path out_dir(const RunConfig& c) { return c.out.value_or("slev_out"); }

inline void echo_config(const RunConfig& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / "config.json");
  if (!os) throw IoError("cannot write " + (dir / "config.json").string());
  os << c.resolved.dump(2) << '\n';
}

/// Single series from a simulation CSV or a `timestamp,price` / `timestamp,log_price`
/// CSV. Timestamps are shifted to start at 0; T defaults to the last one.
inline TickSeries read_series(const EstimateOptions& o) {
  std::ifstream is(o.input);
  if (!is) throw IoError("cannot open " + o.input);
  std::string header;
  std::getline(is, header);
  is.close();
  std::vector<double> t, p;
  if (header.rfind("timestamp,clean_logprice,noisy_logprice", 0) == 0) {
    auto csv = read_sim_csv(o.input);
    if (o.column != "noisy" && o.column != "clean") throw InvalidInput("--column must be noisy or clean");
    t = std::move(csv.timestamps);
    p = o.column == "clean" ? std::move(csv.clean) : std::move(csv.noisy);
  } else {
    const auto cols = slev::detail::split_csv_line(header);
    std::optional<std::size_t> ti, pi;
    bool is_log = false;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      const auto c = slev::detail::lower(cols[i]);
      if (c == "timestamp") ti = i;
      if (c == "price") pi = i;
      if (c == "log_price" || c == "logprice") {
        pi = i;
        is_log = true;
      }
    }
    if (!ti || !pi) throw DataError(o.input + ": need a timestamp column and a price or log_price column");
    std::ifstream in(o.input);
    std::string line;
    std::getline(in, line);
    std::size_t row = 1;
    while (std::getline(in, line)) {
      ++row;
      if (slev::detail::lower(line).empty()) continue;
      const auto f = slev::detail::split_csv_line(line);
      const auto ts = f.size() > *ti ? parse_timestamp(f[*ti]) : std::nullopt;
      char* end = nullptr;
      const double v = f.size() > *pi ? std::strtod(f[*pi].c_str(), &end) : std::nan("");
      if (!ts || !end || *end != '\0' || !std::isfinite(v) || (!is_log && !(v > 0.0)))
        throw DataError(o.input + ": malformed row " + std::to_string(row));
      t.push_back(*ts);
      p.push_back(is_log ? v : std::log(v));
    }
  }
  if (t.size() < 2) throw InvalidInput(o.input + ": need at least 2 observations");
  const double t0 = t.front();
  for (auto& x : t) x -= t0;
  const double T = o.horizon.value_or(t.back());
  return TickSeries(std::move(t), std::move(p), T);
}

inline int required(const std::optional<int>& v, int fallback) { return v.value_or(fallback); }

}  // namespace detail

/// One estimate of one series as a JSON document.
inline nlohmann::json estimate(const EstimateOptions& o) {
  const auto s = detail::read_series(o);
  const std::size_t n = s.size();
  const CutFrequencies sched = n >= 16 ? consistency_schedule(n) : CutFrequencies{static_cast<int>(std::max<std::size_t>(n / 2, 1)), 1, n};
  nlohmann::json j{{"estimator", o.estimator}, {"n", n}, {"horizon", s.horizon()}};
  const CutFrequencies lev{detail::required(o.M, sched.M), detail::required(o.N, sched.N), n};
  const int fev_m = detail::required(o.fev_m, static_cast<int>(std::max<std::size_t>(n / 2, 1)));
  const CutFrequencies fvv{detail::required(o.fevv_m, sched.M), detail::required(o.fevv_n, 2), n};
  double value = 0.0;
  if (o.estimator == "fel") {
    value = fel_spectral(s, lev).value;
    j["M"] = lev.M;
    j["N"] = lev.N;
    j["fel"] = value;
  } else if (o.estimator == "fel-corrected") {
    if (!o.b) throw InvalidInput("fel-corrected needs --b (the tuned control coefficient)");
    const CutFrequencies uc{detail::required(o.ups_m, lev.M), detail::required(o.ups_n, lev.N), n};
    const double eta = fel_spectral(s, lev).value;
    const double ups = upsilon(s, uc);
    value = fel_corrected(eta, ups, *o.b);
    j["M"] = lev.M;
    j["N"] = lev.N;
    j["upsilon_M"] = uc.M;
    j["upsilon_N"] = uc.N;
    j["fel"] = eta;
    j["upsilon"] = ups;
    j["b"] = *o.b;
    j["fel_corrected"] = value;
  } else if (o.estimator == "fev") {
    value = fev(s, fev_m);
    j["M"] = fev_m;
    j["fev"] = value;
  } else if (o.estimator == "fevv") {
    value = fevv(s, fvv);
    j["M"] = fvv.M;
    j["N"] = fvv.N;
    j["fevv"] = value;
  } else if (o.estimator == "rt") {
    const auto r = rt_estimate(s, lev, fev_m, fvv);
    value = r.value;
    j["lev_cut"] = {{"M", lev.M}, {"N", lev.N}};
    j["fev_M"] = fev_m;
    j["fevv_cut"] = {{"M", fvv.M}, {"N", fvv.N}};
    j["fel"] = r.numerator.value;
    j["fev"] = r.fev;
    j["fevv"] = r.fevv;
    j["rt"] = value;
  } else {
    throw InvalidInput("unknown estimator '" + o.estimator + "' (fel, fel-corrected, fev, fevv, rt)");
  }
  if (o.truth) {
    j["truth"] = *o.truth;
    j["error"] = value - *o.truth;
  }
  return j;
}

inline void cmd_simulate(const RunConfig& c, std::size_t day, std::ostream& err) {
  const auto dir = detail::out_dir(c);
  const auto csv = dir / "sim.csv";
  const auto side = dir / "sim.json";
  try {
    std::filesystem::create_directories(dir);
    const auto sim = simulate_scenario(c.scenario, derive_seed(c.seed, day));
    write_sim_csv(sim, csv);
    auto j = sim_truths_json(sim);
    j["day"] = day;
    j["config"] = c.resolved;
    std::ofstream os(side);
    if (!os) throw IoError("cannot write " + side.string());
    os << j.dump(2) << '\n';
    if (!os) throw IoError("write failed for " + side.string());
    err << "simulate: " << sim.clean_series.size() << " steps written to " << csv.string() << '\n';
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(csv, ec);
    std::filesystem::remove(side, ec);
    throw;
  }
}

inline void cmd_tune(const RunConfig& c, std::ostream& err) {
  const auto dir = detail::out_dir(c);
  auto ec = c.experiment;
  ec.days = c.tune_days;
  const auto g = c.grids;
  err << "tune: simulating " << ec.days << " days at n = " << c.scenario.observed_n() << '\n';
  const auto recs = simulate_days(ec, g);
  Matrix fel(recs.size(), g.fel.cells()), ups(recs.size(), g.fel.cells());
  std::vector<double> truths;
  for (std::size_t r = 0; r < recs.size(); ++r) {
    std::copy(recs[r].values.fel.begin(), recs[r].values.fel.end(), fel.row(r).begin());
    std::copy(recs[r].values.upsilon.begin(), recs[r].values.upsilon.end(), ups.row(r).begin());
    truths.push_back(recs[r].truth.eta);
  }
  auto spec = g.fel;
  spec.objective = c.tune_objective;
  spec.min_replications = c.tune_min_replications;
  const auto plain = grid_search(fel, truths, spec);
  nlohmann::json out{{"plain", to_json(plain)}, {"truth_mean_eta", stats::mean(truths)}};
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "surface.csv");
    write_surface_csv(plain, os);
  }
  if (c.tune_corrected) {
    try {
      const auto corr = corrected_from_matrices(fel, ups, truths, spec);
      out["corrected"] = to_json(corr);
      std::ofstream os(dir / "surface_corrected.csv");
      write_surface_csv(corr, os);
    } catch (const InvalidInput& e) {
      out["corrected"] = nullptr;
      out["corrected_skipped"] = e.what();
      err << "tune: corrected procedure skipped: " << e.what() << '\n';
    }
  }
  std::ofstream os(dir / "tuning.json");
  os << out.dump(2) << '\n';
  detail::echo_config(c, dir);
  err << "tune: " << to_string(spec.objective) << " argmin (M, N) = (" << plain.m_hat << ", " << plain.n_hat
      << ")\n";
}

inline void cmd_mc(const RunConfig& c, std::ostream& err) {
  const auto dir = detail::out_dir(c);
  if (c.sweep) {
    nlohmann::json pts = nlohmann::json::array();
    const auto res = run_sensitivity(c.experiment, *c.sweep, c.sweep_values);
    for (std::size_t i = 0; i < res.size(); ++i) {
      nlohmann::json pj{{"value", res[i].value}, {"skipped", res[i].skipped}};
      if (res[i].skipped) {
        pj["reason"] = res[i].reason;
        err << "mc: sweep point " << res[i].value << " skipped: " << res[i].reason << '\n';
      } else {
        const auto sub = "point_" + std::to_string(i);
        auto pc = c.experiment;
        pc.scenario.model = ModelKind::gen_heston;
        write_experiment(*res[i].report, pc, dir / sub);
        pj["dir"] = sub;
        if (const auto* s = res[i].report->find("fel_star_variance")) pj["lambda"] = *s->lambda;
      }
      pts.push_back(pj);
    }
    std::filesystem::create_directories(dir);
    std::ofstream os(dir / "sweep.json");
    os << nlohmann::json{{"kind", *c.sweep == SweepKind::theta ? "theta" : "zeta"}, {"points", pts}}.dump(2) << '\n';
    detail::echo_config(c, dir);
    return;
  }
  err << "mc: " << c.experiment.days << " days at n = " << c.scenario.observed_n() << '\n';
  const auto rep = run_experiment(c.experiment);
  write_experiment(rep, c.experiment, dir, &c.resolved);
  err << "mc: done in " << rep.runtime_seconds << " s, " << rep.days_used << " days used\n";
}

inline void cmd_empirical(const RunConfig& c, std::ostream& err) {
  const auto dir = detail::out_dir(c);
  std::filesystem::create_directories(dir);
  std::filesystem::path input;
  SessionSpec session = c.session;
  if (c.empirical_input) {
    input = *c.empirical_input;
  } else {
    // Synthetic tick file from the configured scenario, one step per second.
    const double len = c.synthetic_session_seconds.value_or(static_cast<double>(c.scenario.observed_n()));
    input = dir / "synthetic_ticks.csv";
    std::ofstream os(input);
    if (!os) throw IoError("cannot write " + input.string());
    err << "empirical: writing " << c.synthetic_days << " synthetic sessions to " << input.string() << '\n';
    write_synthetic_ticks(c.scenario, c.synthetic_days, c.seed, c.synthetic_first_date, c.synthetic_open, len, os);
    session.open_seconds = c.synthetic_open;
    session.close_seconds = c.synthetic_open + len;
    session.utc_offset_seconds = 0.0;
  }
  const auto loaded = load_sessions(input, session);
  err << "empirical: " << loaded.report.sessions << " sessions, " << loaded.report.kept << " ticks kept, "
      << loaded.report.corrupt << " corrupt rows\n";
  if (loaded.sessions.empty()) throw DataError(input.string() + ": no usable sessions");
  auto ecfg = c.empirical;
  if (c.grids_explicit()) ecfg.grids = c.grids_for(median_returns(loaded.sessions));
  const auto res = empirical_pipeline(loaded.sessions, ecfg);
  write_empirical(res, loaded.report, dir);
  detail::echo_config(c, dir);
  for (const auto& y : res.yearly)
    if (y.corrected_skipped) err << "empirical: " << y.year << ": corrected procedure skipped: " << *y.corrected_skipped << '\n';
}

/// Parses argv and runs one subcommand. Machine-readable output goes to
/// `out`, logs to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Fourier estimators of integrated leverage, volatility and vol-of-vol"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config, "JSON configuration file");
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--threads", g.threads, "worker threads (0 = all cores)");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--set", g.sets, "override a config key: a.b=value")->take_all();

  std::size_t day = 0;
  auto* sim = app.add_subcommand("simulate", "simulate one day (sim.csv, sim.json)");
  sim->add_option("--day", day, "day index; the path seed is derived from (seed, day)");
  EstimateOptions eo;
  auto* est = app.add_subcommand("estimate", "estimate on one series, JSON to stdout");
  est->add_option("input", eo.input, "simulation CSV or timestamp,price CSV")->required();
  est->add_option("--estimator", eo.estimator, "fel | fel-corrected | fev | fevv | rt");
  est->add_option("--column", eo.column, "simulation CSV column: noisy | clean");
  est->add_option("--horizon", eo.horizon, "window length T (default: last timestamp)");
  est->add_option("--M", eo.M, "leverage cut M");
  est->add_option("--N", eo.N, "leverage cut N");
  est->add_option("--fev-M", eo.fev_m, "FEV cut M");
  est->add_option("--fevv-M", eo.fevv_m, "FEVV cut M");
  est->add_option("--fevv-N", eo.fevv_n, "FEVV cut N");
  est->add_option("--upsilon-M", eo.ups_m, "control cut M");
  est->add_option("--upsilon-N", eo.ups_n, "control cut N");
  est->add_option("--b", eo.b, "control coefficient for fel-corrected");
  est->add_option("--truth", eo.truth, "true value; adds the error to the output");
  auto* tune = app.add_subcommand("tune", "select (M, N) on simulated days");
  auto* mc = app.add_subcommand("mc", "Monte Carlo experiment");
  auto* emp = app.add_subcommand("empirical", "daily and yearly estimates from a tick file");
  for (auto* s : {sim, est, tune, mc, emp}) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return ok;
    }
    err << "slev: " << e.what() << '\n';
    return config_error;
  }

  try {
    if (est->parsed()) {
      out << estimate(eo).dump(2) << '\n';
      return ok;
    }
    const auto c = detail::resolve(g);
    if (sim->parsed()) cmd_simulate(c, day, err);
    if (tune->parsed()) cmd_tune(c, err);
    if (mc->parsed()) cmd_mc(c, err);
    if (emp->parsed()) cmd_empirical(c, err);
    return ok;
  } catch (const Error& e) {
    err << "slev: " << e.what() << '\n';
    if (est->parsed())
      out << nlohmann::json{{"error", {{"kind", kind_name(e.kind())}, {"message", e.what()}}}}.dump(2) << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "slev: " << e.what() << '\n';
    if (est->parsed()) out << nlohmann::json{{"error", {{"kind", "io"}, {"message", e.what()}}}}.dump(2) << '\n';
    return data_error;
  }
}

}  // namespace slev::cli
