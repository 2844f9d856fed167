#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "slev/errors.hpp"
#include "slev/estimators.hpp"
#include "slev/mc_harness.hpp"
#include "slev/parallel.hpp"
#include "slev/stats.hpp"
#include "slev/tick_series.hpp"
#include "slev/tuning.hpp"

namespace slev {

//---------------------------------------------------------------------------
// Time handling
//---------------------------------------------------------------------------

/// Epoch seconds from "YYYY-MM-DD[T ]HH:MM:SS[.fff][Z|+HH:MM|-HH:MM]" or a
/// plain (fractional) epoch number. ISO stamps without a zone are UTC.
inline std::optional<double> parse_timestamp(const std::string& raw) {
  std::string s = raw;
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
  if (s.empty()) return std::nullopt;
  if (s.size() >= 10 && s[4] == '-' && s[7] == '-') {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, consumed = 0;
    double sec = 0.0;
    if (std::sscanf(s.c_str(), "%4d-%2d-%2d%*1[T ]%2d:%2d:%lf%n", &y, &mo, &d, &h, &mi, &sec, &consumed) != 6)
      return std::nullopt;
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec < 0.0 || sec >= 61.0) return std::nullopt;
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    double t = static_cast<double>(sys_days{ymd}.time_since_epoch().count()) * 86400.0 + h * 3600.0 + mi * 60.0 + sec;
    std::string zone = s.substr(static_cast<std::size_t>(consumed));
    if (zone.empty() || zone == "Z") return t;
    int zh = 0, zm = 0;
    char sign = zone[0];
    if ((sign != '+' && sign != '-') || std::sscanf(zone.c_str() + 1, "%2d:%2d", &zh, &zm) != 2) return std::nullopt;
    const double off = zh * 3600.0 + zm * 60.0;
    return sign == '+' ? t - off : t + off;
  }
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::string format_date(long days_since_epoch) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{days_since_epoch}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

inline long parse_date(const std::string& s) {
  int y = 0, m = 0, d = 0;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d", &y, &m, &d) != 3) throw InvalidInput("bad date '" + s + "'");
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw InvalidInput("bad date '" + s + "'");
  return sys_days{ymd}.time_since_epoch().count();
}

//---------------------------------------------------------------------------
// Sessions
//---------------------------------------------------------------------------

/// Trading window in local time (UTC + utc_offset_seconds), as seconds after
/// local midnight. Without open/close the whole calendar day is one session.
struct SessionSpec {
  std::optional<double> open_seconds;
  std::optional<double> close_seconds;
  double utc_offset_seconds = 0.0;

  double open() const { return open_seconds.value_or(0.0); }
  double close() const { return close_seconds.value_or(86400.0); }
  double length() const { return close() - open(); }

  void validate() const {
    if (open_seconds.has_value() != close_seconds.has_value())
      throw InvalidInput("session: give both open and close, or neither");
    if (!(open() >= 0.0) || !(close() <= 86400.0) || !(close() > open()))
      throw InvalidInput("session: need 0 <= open < close <= 86400 seconds");
  }
};

struct DailySession {
  std::string date;  // local calendar date, YYYY-MM-DD
  int year = 0;
  double open_epoch = 0.0;  // epoch seconds of the session open
  std::vector<double> prices;  // kept trade prices, in time order
  TickSeries series;           // log-prices, time in seconds since the open, T = session length
  std::size_t raw_trades = 0;  // trades in the window before duplicate collapsing
};

struct RowError {
  std::size_t line = 0;
  std::string message;
};

/// kept + corrupt + out_of_session + duplicates = input_rows.
struct LoadReport {
  std::size_t input_rows = 0;
  std::size_t kept = 0;
  std::size_t corrupt = 0;
  std::size_t out_of_session = 0;
  std::size_t duplicates = 0;
  std::size_t sessions = 0;
  std::size_t sessions_too_short = 0;  // fewer than 2 distinct timestamps, dropped
  std::vector<RowError> errors;
};

struct LoadResult {
  std::vector<DailySession> sessions;
  LoadReport report;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
  return s;
}

struct Tick {
  double t = 0.0;
  double price = 0.0;
  std::size_t order = 0;
};

}  // namespace detail

/// Parses a tick CSV (header with `timestamp` and `price` columns) and cuts it
/// into daily sessions. Equal timestamps keep the last tick in file order.
inline LoadResult load_sessions(std::istream& is, const SessionSpec& spec, const std::string& source = "<stream>") {
  spec.validate();
  LoadResult res;
  auto& rep = res.report;
  std::string line;
  if (!std::getline(is, line)) throw DataError(source + ": empty file");
  const auto header = detail::split_csv_line(line);
  std::optional<std::size_t> ti, pi;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto h = detail::lower(header[i]);
    if (h == "timestamp") ti = i;
    if (h == "price") pi = i;
  }
  if (!ti || !pi) throw DataError(source + ": header must contain 'timestamp' and 'price' columns");

  std::map<long, std::vector<detail::Tick>> by_day;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::lower(line).empty()) continue;
    ++rep.input_rows;
    const auto f = detail::split_csv_line(line);
    auto fail = [&](const std::string& msg) {
      ++rep.corrupt;
      rep.errors.push_back({lineno, msg});
    };
    if (f.size() <= std::max(*ti, *pi)) {
      fail("missing columns");
      continue;
    }
    const auto t = parse_timestamp(f[*ti]);
    if (!t) {
      fail("unparseable timestamp '" + f[*ti] + "'");
      continue;
    }
    char* end = nullptr;
    const std::string ps = detail::lower(f[*pi]);
    const double price = std::strtod(ps.c_str(), &end);
    if (ps.empty() || *end != '\0' || !std::isfinite(price)) {
      fail("unparseable price '" + f[*pi] + "'");
      continue;
    }
    if (!(price > 0.0)) {
      fail("non-positive price");
      continue;
    }
    const double local = *t + spec.utc_offset_seconds;
    const long day = static_cast<long>(std::floor(local / 86400.0));
    const double tod = local - static_cast<double>(day) * 86400.0;
    if (tod < spec.open() || tod > spec.close()) {
      ++rep.out_of_session;
      continue;
    }
    by_day[day].push_back({tod - spec.open(), price, rep.input_rows});
  }
  if (rep.input_rows == 0) throw DataError(source + ": no data rows");

  for (auto& [day, ticks] : by_day) {
    std::stable_sort(ticks.begin(), ticks.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
    std::vector<double> t, p, prices;
    for (const auto& k : ticks) {
      if (!t.empty() && t.back() == k.t) {
        ++rep.duplicates;
        p.back() = std::log(k.price);
        prices.back() = k.price;
        continue;
      }
      t.push_back(k.t);
      p.push_back(std::log(k.price));
      prices.push_back(k.price);
    }
    if (t.size() < 2) {
      ++rep.sessions_too_short;
      rep.kept += t.size();
      continue;
    }
    rep.kept += t.size();
    const std::string date = format_date(day);
    res.sessions.push_back(DailySession{date, std::stoi(date.substr(0, 4)),
                                        static_cast<double>(day) * 86400.0 + spec.open() - spec.utc_offset_seconds,
                                        std::move(prices), TickSeries(std::move(t), std::move(p), spec.length()),
                                        ticks.size()});
  }
  rep.sessions = res.sessions.size();
  return res;
}

inline LoadResult load_sessions(const std::filesystem::path& path, const SessionSpec& spec) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  return load_sessions(is, spec, path.string());
}

/// timestamp (epoch seconds), price. Reloading with the same SessionSpec
/// reproduces the sessions.
inline void write_sessions_csv(const std::vector<DailySession>& sessions, std::ostream& os) {
  os << "timestamp,price\n";
  for (const auto& s : sessions) {
    const auto t = s.series.timestamps();
    for (std::size_t i = 0; i < t.size(); ++i)
      os << format_double(s.open_epoch + t[i]) << ',' << format_double(s.prices[i]) << '\n';
  }
}

//---------------------------------------------------------------------------
// Descriptive statistics
//---------------------------------------------------------------------------

struct MomentSummary {
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct YearSummary {
  int year = 0;
  std::size_t sessions = 0;
  std::size_t trades = 0;
  MomentSummary price;
  MomentSummary log_return;
};

namespace detail {

inline MomentSummary moments(const std::vector<double>& x) {
  if (x.empty()) return {};
  MomentSummary m;
  m.mean = stats::mean(x);
  m.std = x.size() > 1 ? stats::sample_std(x) : 0.0;
  m.min = *std::min_element(x.begin(), x.end());
  m.max = *std::max_element(x.begin(), x.end());
  return m;
}

}  // namespace detail

/// Per calendar year: trades, trade prices and within-session log-returns.
inline std::vector<YearSummary> summary_stats(const std::vector<DailySession>& sessions) {
  if (sessions.empty()) throw InvalidInput("summary_stats: no sessions");
  std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_year;
  std::map<int, std::size_t> count;
  for (const auto& s : sessions) {
    auto& [pr, rt] = by_year[s.year];
    pr.insert(pr.end(), s.prices.begin(), s.prices.end());
    rt.insert(rt.end(), s.series.returns().begin(), s.series.returns().end());
    ++count[s.year];
  }
  std::vector<YearSummary> out;
  for (const auto& [y, v] : by_year)
    out.push_back({y, count[y], v.first.size(), detail::moments(v.first), detail::moments(v.second)});
  return out;
}

struct AcfResult {
  std::vector<double> values;  // lags 0..max_lag
  double band = 0.0;           // 1.96 / sqrt(n)
  std::size_t n = 0;
};

/// Sample autocorrelation sum_t (x_t - m)(x_{t+k} - m) / sum_t (x_t - m)^2.
inline AcfResult acf(std::span<const double> x, std::size_t max_lag) {
  if (max_lag < 1) throw InvalidInput("acf: max_lag must be >= 1");
  if (x.size() < max_lag + 2)
    throw InvalidInput("acf: need at least max_lag + 2 = " + std::to_string(max_lag + 2) + " returns, got " +
                       std::to_string(x.size()));
  const double m = stats::mean(x);
  std::vector<double> dev(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) dev[i] = x[i] - m;
  double denom = 0.0;
  for (double v : dev) denom += v * v;
  AcfResult r;
  r.n = x.size();
  r.band = 1.96 / std::sqrt(static_cast<double>(x.size()));
  r.values.resize(max_lag + 1);
  r.values[0] = 1.0;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double num = 0.0;
    for (std::size_t i = 0; i + k < dev.size(); ++i) num += dev[i] * dev[i + k];
    r.values[k] = denom > 0.0 ? num / denom : 0.0;
  }
  return r;
}

/// Realized variance on a calendar grid of `step` seconds with last-tick
/// sampling; before the first trade the first price is used.
inline double sparse_realized_variance(const TickSeries& s, double step = 300.0) {
  if (!(step > 0.0)) throw InvalidInput("sparse RV step must be > 0");
  const auto t = s.timestamps();
  const auto p = s.log_prices();
  const std::size_t k = static_cast<std::size_t>(std::floor(s.horizon() / step + 1e-9));
  double rv = 0.0;
  double prev = p[0];
  std::size_t j = 0;
  for (std::size_t g = 1; g <= k; ++g) {
    const double tg = static_cast<double>(g) * step;
    while (j + 1 < t.size() && t[j + 1] <= tg) ++j;
    const double cur = t[j] <= tg ? p[j] : p[0];
    rv += (cur - prev) * (cur - prev);
    prev = cur;
  }
  return rv;
}

//---------------------------------------------------------------------------
// Empirical pipeline
//---------------------------------------------------------------------------

struct EmpiricalConfig {
  /// Tuning grids; defaults from the median number of returns per session.
  std::optional<EstimationGrids> grids;
  /// Fixed cuts override the yearly variance-objective selection.
  std::optional<CutFrequencies> lev_cut;
  std::optional<int> fev_m;
  std::optional<CutFrequencies> fevv_cut;
  double rv_step = 300.0;
  std::size_t acf_max_lag = 20;
  std::size_t min_replications = 10;
  unsigned threads = 1;
};

struct DailyEstimate {
  std::string date;
  int year = 0;
  std::size_t n = 0;
  double eta_tilde = std::numeric_limits<double>::quiet_NaN();
  double eta_star = std::numeric_limits<double>::quiet_NaN();
  double fev = std::numeric_limits<double>::quiet_NaN();
  double fevv = std::numeric_limits<double>::quiet_NaN();
  double rv5 = std::numeric_limits<double>::quiet_NaN();
  double rt_tilde = std::numeric_limits<double>::quiet_NaN();
  double rt_star = std::numeric_limits<double>::quiet_NaN();
};

struct YearlyEstimator {
  std::string name;
  double mean = 0.0;
  double var = 0.0;
  std::optional<double> lambda;
  int M = 0;
  int N = 0;
};

struct YearlyRow {
  int year = 0;
  std::size_t days = 0;
  std::vector<YearlyEstimator> estimators;
  std::optional<TuningResult> lev_tuning;
  std::optional<TuningResult> corrected_tuning;
  std::optional<std::string> corrected_skipped;
};

struct EmpiricalResult {
  std::vector<DailyEstimate> daily;
  std::vector<YearlyRow> yearly;
  std::vector<DayValues> day_values;  // every grid cell, in session order
  EstimationGrids grids;
  std::vector<YearSummary> summary;
  AcfResult returns_acf;
};

inline std::size_t median_returns(const std::vector<DailySession>& sessions) {
  if (sessions.empty()) throw InvalidInput("no sessions");
  std::vector<std::size_t> ns;
  for (const auto& s : sessions) ns.push_back(s.series.size());
  std::nth_element(ns.begin(), ns.begin() + static_cast<std::ptrdiff_t>(ns.size() / 2), ns.end());
  return ns[ns.size() / 2];
}

inline EstimationGrids empirical_grids(const std::vector<DailySession>& sessions, const EmpiricalConfig& cfg) {
  if (cfg.grids) return *cfg.grids;
  return EstimationGrids::defaults(median_returns(sessions));
}

/// Daily FEL, corrected FEL, FEV, FEVV, 5-minute RV and both R_T variants,
/// with cuts selected per calendar year by the variance objective unless
/// fixed in cfg. Day values come from the same evaluate_day as the Monte
/// Carlo harness.
inline EmpiricalResult empirical_pipeline(const std::vector<DailySession>& sessions, const EmpiricalConfig& cfg) {
  if (sessions.empty()) throw InvalidInput("empirical_pipeline: no sessions");
  EmpiricalResult out;
  out.grids = empirical_grids(sessions, cfg);
  out.grids.validate();
  const auto& g = out.grids;

  out.day_values.resize(sessions.size());
  parallel_for(sessions.size(), cfg.threads, [&](std::size_t i) {
    out.day_values[i] = sessions[i].series.size() >= 3 ? evaluate_day(sessions[i].series, g) : DayValues{};
  });

  out.daily.resize(sessions.size());
  std::map<int, std::vector<std::size_t>> by_year;
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    auto& d = out.daily[i];
    d.date = sessions[i].date;
    d.year = sessions[i].year;
    d.n = sessions[i].series.size();
    d.rv5 = sparse_realized_variance(sessions[i].series, cfg.rv_step);
    if (!out.day_values[i].fel.empty() && out.day_values[i].finite()) by_year[d.year].push_back(i);
  }

  for (const auto& [year, idx] : by_year) {
    YearlyRow row;
    row.year = year;
    row.days = idx.size();
    const std::size_t d = idx.size();
    Matrix fel(d, g.fel.cells()), ups(d, g.fel.cells()), fevm(d, g.fev.m_values.size()), fevvm(d, g.fevv.cells());
    for (std::size_t r = 0; r < d; ++r) {
      const auto& v = out.day_values[idx[r]];
      std::copy(v.fel.begin(), v.fel.end(), fel.row(r).begin());
      std::copy(v.upsilon.begin(), v.upsilon.end(), ups.row(r).begin());
      std::copy(v.fev.begin(), v.fev.end(), fevm.row(r).begin());
      std::copy(v.fevv.begin(), v.fevv.end(), fevvm.row(r).begin());
    }
    auto spec = g.fel;
    spec.objective = Objective::variance;
    spec.min_replications = cfg.min_replications;

    // Leverage cut: fixed, or the variance argmin for the year.
    std::size_t c_lev = 0;
    if (cfg.lev_cut) {
      c_lev = detail::cell_index(g.fel, cfg.lev_cut->M, cfg.lev_cut->N);
      if (c_lev >= g.fel.cells()) throw InvalidInput("empirical: fixed leverage cut is not on the grid");
    } else if (d >= 2) {
      row.lev_tuning = grid_search(fel, std::nullopt, spec);
      c_lev = detail::cell_index(g.fel, row.lev_tuning->m_hat, row.lev_tuning->n_hat);
    }
    std::vector<double> eta_star(d, std::numeric_limits<double>::quiet_NaN());
    try {
      row.corrected_tuning = corrected_from_matrices(fel, ups, std::nullopt, spec);
      eta_star = row.corrected_tuning->selected_estimates;
    } catch (const Error& e) {
      row.corrected_skipped = e.what();
    }

    std::size_t c_fev = 0, c_fevv = 0;
    if (cfg.fev_m) {
      c_fev = static_cast<std::size_t>(std::find(g.fev.m_values.begin(), g.fev.m_values.end(), *cfg.fev_m) -
                                       g.fev.m_values.begin());
      if (c_fev >= g.fev.m_values.size()) throw InvalidInput("empirical: fixed FEV cut is not on the grid");
    } else if (d >= 2) {
      auto fs = g.fev;
      fs.objective = Objective::variance;
      const auto t = grid_search(fevm, std::nullopt, fs);
      c_fev = detail::cell_index(g.fev, t.m_hat, t.n_hat);
    }
    if (cfg.fevv_cut) {
      c_fevv = detail::cell_index(g.fevv, cfg.fevv_cut->M, cfg.fevv_cut->N);
      if (c_fevv >= g.fevv.cells()) throw InvalidInput("empirical: fixed FEVV cut is not on the grid");
    } else if (d >= 2) {
      auto fs = g.fevv;
      fs.objective = Objective::variance;
      const auto t = grid_search(fevvm, std::nullopt, fs);
      c_fevv = detail::cell_index(g.fevv, t.m_hat, t.n_hat);
    }

    std::vector<double> tilde(d), fv(d), fvv(d);
    for (std::size_t r = 0; r < d; ++r) {
      auto& de = out.daily[idx[r]];
      de.eta_tilde = tilde[r] = fel(r, c_lev);
      de.eta_star = eta_star[r];
      de.fev = fv[r] = fevm(r, c_fev);
      de.fevv = fvv[r] = fevvm(r, c_fevv);
      try {
        de.rt_tilde = rt_ratio(de.eta_tilde, de.fev, de.fevv);
        if (std::isfinite(de.eta_star)) de.rt_star = rt_ratio(de.eta_star, de.fev, de.fevv);
      } catch (const DegenerateDenominator&) {
      }
    }

    const auto lev = g.fel.cell(c_lev);
    auto add = [&](std::string name, const std::vector<double>& v, int M, int N, std::optional<double> lambda) {
      std::vector<double> f;
      for (double x : v)
        if (std::isfinite(x)) f.push_back(x);
      YearlyEstimator e{std::move(name), f.empty() ? std::numeric_limits<double>::quiet_NaN() : stats::mean(f),
                        f.size() > 1 ? stats::sample_variance(f) : std::numeric_limits<double>::quiet_NaN(), lambda,
                        M, N};
      row.estimators.push_back(std::move(e));
    };
    add("eta_tilde", tilde, lev.M, lev.N, std::nullopt);
    if (row.corrected_tuning)
      add("eta_star", eta_star, row.corrected_tuning->m_hat, row.corrected_tuning->n_hat, row.corrected_tuning->lambda);
    add("fev", fv, g.fev.m_values[c_fev], 0, std::nullopt);
    const auto fc = g.fevv.cell(c_fevv);
    add("fevv", fvv, fc.M, fc.N, std::nullopt);
    out.yearly.push_back(std::move(row));
  }

  out.summary = summary_stats(sessions);
  std::vector<double> all;
  for (const auto& s : sessions) all.insert(all.end(), s.series.returns().begin(), s.series.returns().end());
  if (all.size() >= cfg.acf_max_lag + 2) out.returns_acf = acf(all, cfg.acf_max_lag);
  return out;
}

inline void write_daily_csv(const EmpiricalResult& r, std::ostream& os) {
  os << "date,n,eta_tilde,eta_star,fev,fevv,rv5,rt_tilde,rt_star\n";
  for (const auto& d : r.daily)
    os << d.date << ',' << d.n << ',' << detail::csv_number(d.eta_tilde) << ',' << detail::csv_number(d.eta_star)
       << ',' << detail::csv_number(d.fev) << ',' << detail::csv_number(d.fevv) << ',' << detail::csv_number(d.rv5)
       << ',' << detail::csv_number(d.rt_tilde) << ',' << detail::csv_number(d.rt_star) << '\n';
}

inline void write_acf_csv(const AcfResult& a, std::ostream& os) {
  os << "lag,acf,lower,upper\n";
  for (std::size_t k = 0; k < a.values.size(); ++k)
    os << k << ',' << format_double(a.values[k]) << ',' << format_double(-a.band) << ',' << format_double(a.band)
       << '\n';
}

inline nlohmann::json to_json(const EmpiricalResult& r) {
  nlohmann::json years = nlohmann::json::array();
  for (const auto& y : r.yearly) {
    nlohmann::json ests = nlohmann::json::array();
    for (const auto& e : y.estimators)
      ests.push_back({{"name", e.name},
                      {"mean", detail::json_number(e.mean)},
                      {"var", detail::json_number(e.var)},
                      {"lambda", e.lambda ? nlohmann::json(*e.lambda) : nlohmann::json(nullptr)},
                      {"M", e.M},
                      {"N", e.N == 0 ? nlohmann::json(nullptr) : nlohmann::json(e.N)}});
    nlohmann::json yj{{"year", y.year}, {"days", y.days}, {"estimators", ests}};
    yj["corrected_skipped"] = y.corrected_skipped ? nlohmann::json(*y.corrected_skipped) : nlohmann::json(nullptr);
    if (y.corrected_tuning && y.corrected_tuning->upsilon_cut)
      yj["upsilon_cut"] = {{"M", y.corrected_tuning->upsilon_cut->M}, {"N", y.corrected_tuning->upsilon_cut->N}};
    years.push_back(yj);
  }
  nlohmann::json summ = nlohmann::json::array();
  for (const auto& s : r.summary) {
    auto mj = [](const MomentSummary& m) {
      return nlohmann::json{{"mean", m.mean}, {"std", m.std}, {"min", m.min}, {"max", m.max}};
    };
    summ.push_back({{"year", s.year},
                    {"sessions", s.sessions},
                    {"trades", s.trades},
                    {"price", mj(s.price)},
                    {"log_return", mj(s.log_return)}});
  }
  return {{"years", years}, {"summary", summ}};
}

inline constexpr const char* empirical_readme = R"(Output of the empirical pipeline.

daily_estimates.csv
  date: session date (local), n: returns in the session
  eta_tilde, eta_star: leverage estimate and its control-variate correction
  fev, fevv: integrated variance and vol-of-vol estimates
  rv5: realized variance from 5-minute last-tick sampling
  rt_tilde, rt_star: leverage ratios eta / sqrt(fev * fevv)
  NA marks values that could not be computed.

yearly_summary.json
  years[]: per calendar year, each estimator's mean, sample variance (d-1),
    selected M and N, and lambda = Var(eta*) / Var(eta~) for eta_star.
  summary[]: trades, price and log-return moments per year.

acf.csv
  lag, acf, lower, upper: autocorrelation of pooled tick log-returns with
  +-1.96/sqrt(n) bands.

load_report.json
  Row accounting of the input file.
)";

inline nlohmann::json to_json(const LoadReport& r) {
  nlohmann::json errs = nlohmann::json::array();
  for (const auto& e : r.errors) errs.push_back({{"line", e.line}, {"message", e.message}});
  return {{"input_rows", r.input_rows}, {"kept", r.kept},
          {"corrupt", r.corrupt},       {"out_of_session", r.out_of_session},
          {"duplicates", r.duplicates}, {"sessions", r.sessions},
          {"sessions_too_short", r.sessions_too_short}, {"errors", errs}};
}

inline void write_empirical(const EmpiricalResult& r, const LoadReport& load, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto os = detail::open_out(dir / "daily_estimates.csv");
    write_daily_csv(r, os);
  }
  {
    auto os = detail::open_out(dir / "yearly_summary.json");
    os << to_json(r).dump(2) << '\n';
  }
  {
    auto os = detail::open_out(dir / "acf.csv");
    write_acf_csv(r.returns_acf, os);
  }
  {
    auto os = detail::open_out(dir / "load_report.json");
    os << to_json(load).dump(2) << '\n';
  }
  {
    auto os = detail::open_out(dir / "README.txt");
    os << empirical_readme;
  }
}

//---------------------------------------------------------------------------
// Synthetic tick files
//---------------------------------------------------------------------------

/// Writes `days` simulated sessions as a tick CSV: day i starts at
/// first_date + i, opens at `open_seconds` UTC, and its k-th observation sits
/// at k * (session_seconds / steps) seconds after the open. Prices are
/// exp(noisy log-price). Day i uses derive_seed(seed, i), as simulate_days does.
inline void write_synthetic_ticks(const SimScenario& sc, std::size_t days, std::uint64_t seed,
                                  const std::string& first_date, double open_seconds, double session_seconds,
                                  std::ostream& os) {
  sc.validate();
  const long d0 = parse_date(first_date);
  os << "timestamp,price\n";
  for (std::size_t i = 0; i < days; ++i) {
    const auto sim = simulate_scenario(sc, derive_seed(seed, i));
    const auto obs = observed_series(sc, sim);
    const double base = static_cast<double>(d0 + static_cast<long>(i)) * 86400.0 + open_seconds;
    const double step = session_seconds / static_cast<double>(obs.size());
    for (std::size_t k = 0; k < obs.observations(); ++k)
      os << format_double(base + static_cast<double>(k) * step) << ',' << format_double(std::exp(obs.log_prices()[k]))
         << '\n';
  }
}

}  // namespace slev
