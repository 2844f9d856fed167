#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "slev/errors.hpp"
#include "slev/estimators.hpp"
#include "slev/parallel.hpp"
#include "slev/stats.hpp"
#include "slev/tick_series.hpp"

namespace slev {

enum class Objective { mse, variance };

inline std::string to_string(Objective o) { return o == Objective::mse ? "mse" : "variance"; }

inline Objective parse_objective(const std::string& s) {
  if (s == "mse") return Objective::mse;
  if (s == "variance") return Objective::variance;
  throw InvalidInput("unknown objective '" + s + "' (expected mse or variance)");
}

/// Dense row-major matrix; rows are replications, columns grid cells.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double> column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  /// Keeps the listed rows, in the given order.
  Matrix select_rows(std::span<const std::size_t> keep) const {
    Matrix out(keep.size(), cols_);
    for (std::size_t i = 0; i < keep.size(); ++i) std::copy_n(row(keep[i]).begin(), cols_, out.row(i).begin());
    return out;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Candidate cutting frequencies. Cells are ordered M-major: cell index
/// = i_M * |n_values| + i_N.
struct GridSpec {
  std::vector<int> m_values;
  std::vector<int> n_values;
  Objective objective = Objective::variance;
  std::size_t min_replications = 10;

  std::size_t cells() const noexcept { return m_values.size() * n_values.size(); }
  CutFrequencies cell(std::size_t idx) const {
    return {m_values[idx / n_values.size()], n_values[idx % n_values.size()]};
  }
  int max_m() const { return m_values.back(); }
  int max_n() const { return n_values.back(); }
  /// Highest return frequency any cell needs.
  int max_freq() const { return max_m() + max_n(); }

  void validate(int min_n = 1) const {
    if (m_values.empty() || n_values.empty()) throw InvalidInput("grid: m_values and n_values must be nonempty");
    auto check = [](const std::vector<int>& v, int lo, const char* name) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] < lo) throw InvalidInput(std::string("grid: ") + name + " must be >= " + std::to_string(lo));
        if (i > 0 && v[i] <= v[i - 1])
          throw InvalidInput(std::string("grid: ") + name + " must be strictly increasing");
      }
    };
    check(m_values, 1, "m_values");
    check(n_values, min_n, "n_values");
  }

  /// 24 log-spaced M in [ceil(n/256), ceil(n/4)] and N = 1..6.
  static GridSpec defaults(std::size_t n, Objective obj = Objective::variance) {
    GridSpec g;
    g.objective = obj;
    const double lo = std::max(1.0, std::ceil(static_cast<double>(n) / 256.0));
    const double hi = std::max(lo, std::ceil(static_cast<double>(n) / 4.0));
    g.m_values = log_spaced(static_cast<int>(lo), static_cast<int>(hi), 24);
    g.n_values = {1, 2, 3, 4, 5, 6};
    return g;
  }

  /// Up to `count` distinct integers spread geometrically over [lo, hi].
  static std::vector<int> log_spaced(int lo, int hi, int count) {
    if (lo < 1 || hi < lo || count < 1) throw InvalidInput("log_spaced: need 1 <= lo <= hi and count >= 1");
    std::vector<int> out;
    for (int k = 0; k < count; ++k) {
      const double f = count == 1 ? 0.0 : static_cast<double>(k) / (count - 1);
      const int v = static_cast<int>(std::lround(lo * std::pow(static_cast<double>(hi) / lo, f)));
      if (out.empty() || v > out.back()) out.push_back(v);
    }
    return out;
  }
};

struct TuningResult {
  int m_hat = 0;
  int n_hat = 0;
  Objective objective = Objective::variance;
  double objective_value = 0.0;
  std::vector<int> m_values;
  std::vector<int> n_values;
  std::vector<double> surface;  // M-major, |m_values| x |n_values|
  std::size_t replications = 0;
  /// Per-replication estimates at the selected cell (eta* when corrected).
  std::vector<double> selected_estimates;

  // Set by the corrected procedure only.
  std::optional<double> b_star;
  std::optional<double> lambda;
  std::optional<CutFrequencies> upsilon_cut;
  std::vector<double> upsilon_star;  // per replication
  std::vector<double> b_surface;     // M-major

  CutFrequencies selected() const { return {m_hat, n_hat}; }
  double at(std::size_t i_m, std::size_t i_n) const { return surface[i_m * n_values.size() + i_n]; }
};

namespace detail {

// Smallest finite value; ties keep the earliest cell (smallest M, then N).
inline std::size_t argmin_cell(std::span<const double> values) {
  std::size_t best = values.size();
  for (std::size_t c = 0; c < values.size(); ++c) {
    if (!std::isfinite(values[c])) continue;
    if (best == values.size() || values[c] < values[best]) best = c;
  }
  if (best == values.size()) throw DegenerateControl("tuning: no grid cell has a finite objective");
  return best;
}

inline void check_shape(const Matrix& m, const GridSpec& spec, const char* what) {
  if (m.cols() != spec.cells())
    throw InvalidInput(std::string(what) + ": matrix has " + std::to_string(m.cols()) + " columns, grid has " +
                       std::to_string(spec.cells()) + " cells");
}

}  // namespace detail

/// Objective per cell and its argmin. The MSE objective needs one truth per
/// replication; the variance objective ignores truths.
inline TuningResult grid_search(const Matrix& estimates, std::optional<std::span<const double>> truths,
                                const GridSpec& spec) {
  spec.validate();
  detail::check_shape(estimates, spec, "grid_search");
  if (estimates.rows() < 2) throw InvalidInput("grid_search needs >= 2 replications");
  if (spec.objective == Objective::mse) {
    if (!truths) throw InvalidInput("grid_search: the mse objective requires truths");
    if (truths->size() != estimates.rows()) throw InvalidInput("grid_search: one truth per replication required");
  }
  TuningResult out;
  out.objective = spec.objective;
  out.m_values = spec.m_values;
  out.n_values = spec.n_values;
  out.replications = estimates.rows();
  out.surface.resize(spec.cells());
  for (std::size_t c = 0; c < spec.cells(); ++c) {
    const auto col = estimates.column(c);
    out.surface[c] = spec.objective == Objective::mse ? stats::mse(col, *truths) : stats::sample_variance(col);
  }
  const std::size_t best = detail::argmin_cell(out.surface);
  const auto cut = spec.cell(best);
  out.m_hat = cut.M;
  out.n_hat = cut.N;
  out.objective_value = out.surface[best];
  out.selected_estimates = estimates.column(best);
  return out;
}

/// Steps 2-4 of the variance-corrected selection, given per-replication
/// eta~ and Upsilon over the grid:
///   (M*, N*) = argmin Var(Upsilon), Upsilon* its column;
///   b*_{M,N} = Cov(eta~_{M,N}, Upsilon*) / Var(Upsilon*), eta* = eta~ - b* Upsilon*;
///   (M^, N^) minimises the objective of eta*.
/// lambda = Var(eta*) / Var(eta~) at (M^, N^).
inline TuningResult corrected_from_matrices(const Matrix& eta_tilde, const Matrix& ups,
                                            std::optional<std::span<const double>> truths, const GridSpec& spec) {
  spec.validate();
  detail::check_shape(eta_tilde, spec, "corrected_procedure");
  detail::check_shape(ups, spec, "corrected_procedure");
  if (eta_tilde.rows() != ups.rows()) throw InvalidInput("corrected_procedure: row counts differ");
  const std::size_t d = eta_tilde.rows();
  if (d < std::max<std::size_t>(spec.min_replications, 2))
    throw InvalidInput("corrected_procedure needs >= " + std::to_string(std::max<std::size_t>(spec.min_replications, 2)) +
                       " replications (got " + std::to_string(d) + ")");

  std::vector<double> ups_var(spec.cells());
  for (std::size_t c = 0; c < spec.cells(); ++c) ups_var[c] = stats::sample_variance(ups.column(c));
  const std::size_t star = detail::argmin_cell(ups_var);
  const auto ups_star = ups.column(star);
  const double var_star = ups_var[star];
  if (!(var_star > 0.0))
    throw DegenerateControl("corrected_procedure: Var(Upsilon*) = 0 at (M, N) = (" +
                            std::to_string(spec.cell(star).M) + ", " + std::to_string(spec.cell(star).N) + ")");

  Matrix eta_star(d, spec.cells());
  std::vector<double> b(spec.cells());
  for (std::size_t c = 0; c < spec.cells(); ++c) {
    const auto col = eta_tilde.column(c);
    b[c] = optimal_b(stats::sample_covariance(col, ups_star), var_star);
    for (std::size_t r = 0; r < d; ++r) eta_star(r, c) = fel_corrected(col[r], ups_star[r], b[c]);
  }

  TuningResult out = grid_search(eta_star, truths, spec);
  const std::size_t sel = static_cast<std::size_t>(
      std::find(spec.m_values.begin(), spec.m_values.end(), out.m_hat) - spec.m_values.begin()) *
                              spec.n_values.size() +
                          static_cast<std::size_t>(
                              std::find(spec.n_values.begin(), spec.n_values.end(), out.n_hat) - spec.n_values.begin());
  const double var_tilde = stats::sample_variance(eta_tilde.column(sel));
  out.b_star = b[sel];
  out.lambda = var_tilde > 0.0 ? stats::sample_variance(out.selected_estimates) / var_tilde : 1.0;
  out.upsilon_cut = spec.cell(star);
  out.upsilon_star = ups_star;
  out.b_surface = std::move(b);
  return out;
}

/// eta~ and Upsilon of one series over every grid cell.
inline void evaluate_fel_cells(const SpectralCache& cache, const GridSpec& spec, std::span<double> fel_row,
                               std::span<double> ups_row) {
  cache.require(spec.max_freq());
  const int nmax = spec.max_n();
  for (std::size_t im = 0; im < spec.m_values.size(); ++im) {
    const int M = spec.m_values[im];
    const auto vol = volatility_coefficients(cache.returns(), M, nmax);
    for (std::size_t in = 0; in < spec.n_values.size(); ++in) {
      const CutFrequencies cut{M, spec.n_values[in], cache.n()};
      const std::size_t c = im * spec.n_values.size() + in;
      fel_row[c] = fel_from_vol(cache.returns(), vol, cut).value;
      if (!ups_row.empty()) ups_row[c] = cache.n() < 3 ? 0.0 : upsilon_from_vol(cache, vol, cut);
    }
  }
}

struct FelMatrices {
  Matrix fel;
  Matrix upsilon;
};

inline FelMatrices fel_matrices(std::span<const TickSeries> series, const GridSpec& spec, unsigned threads = 1) {
  spec.validate();
  FelMatrices out{Matrix(series.size(), spec.cells()), Matrix(series.size(), spec.cells())};
  parallel_for(series.size(), threads, [&](std::size_t r) {
    const SpectralCache cache(series[r], spec.max_freq());
    evaluate_fel_cells(cache, spec, out.fel.row(r), out.upsilon.row(r));
  });
  return out;
}

/// Full four-step procedure on a set of replications.
inline TuningResult corrected_procedure(std::span<const TickSeries> replications, const GridSpec& spec,
                                        std::optional<std::span<const double>> truths = std::nullopt,
                                        unsigned threads = 1) {
  const auto m = fel_matrices(replications, spec, threads);
  return corrected_from_matrices(m.fel, m.upsilon, truths, spec);
}

/// (M, N) = (ceil(sqrt(n)), ceil(n^(1/8))) in exact integer arithmetic, so
/// N^2/M -> 0 and M N / n -> 0 on equidistant grids.
inline CutFrequencies consistency_schedule(std::size_t n) {
  if (n < 16) throw InvalidInput("consistency_schedule needs n >= 16");
  auto ceil_root = [n](int k) {
    int r = static_cast<int>(std::floor(std::pow(static_cast<double>(n), 1.0 / k)));
    auto pw = [k](long double x) {
      long double p = 1;
      for (int i = 0; i < k; ++i) p *= x;
      return p;
    };
    while (r > 1 && pw(r - 1) >= static_cast<long double>(n)) --r;
    while (pw(r) < static_cast<long double>(n)) ++r;
    return r;
  };
  return {ceil_root(2), ceil_root(8), n};
}

//---------------------------------------------------------------------------
// Serialization
//---------------------------------------------------------------------------

inline nlohmann::json to_json(const TuningResult& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < r.m_values.size(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < r.n_values.size(); ++j) row.push_back(r.at(i, j));
    rows.push_back(row);
  }
  nlohmann::json j{{"m_hat", r.m_hat},
                   {"n_hat", r.n_hat},
                   {"objective", to_string(r.objective)},
                   {"objective_value", r.objective_value},
                   {"replications", r.replications},
                   {"surface", {{"rows", "M"}, {"cols", "N"}, {"m_values", r.m_values}, {"n_values", r.n_values},
                                {"values", rows}}}};
  j["b_star"] = r.b_star ? nlohmann::json(*r.b_star) : nlohmann::json(nullptr);
  j["lambda"] = r.lambda ? nlohmann::json(*r.lambda) : nlohmann::json(nullptr);
  if (r.upsilon_cut) j["upsilon_cut"] = {{"M", r.upsilon_cut->M}, {"N", r.upsilon_cut->N}};
  return j;
}

/// M,N,objective[,b]
inline void write_surface_csv(const TuningResult& r, std::ostream& os) {
  const bool with_b = !r.b_surface.empty();
  os << "M,N,objective" << (with_b ? ",b" : "") << '\n';
  char buf[64];
  for (std::size_t i = 0; i < r.m_values.size(); ++i)
    for (std::size_t j = 0; j < r.n_values.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", r.at(i, j));
      os << r.m_values[i] << ',' << r.n_values[j] << ',' << buf;
      if (with_b) {
        std::snprintf(buf, sizeof buf, "%.17g", r.b_surface[i * r.n_values.size() + j]);
        os << ',' << buf;
      }
      os << '\n';
    }
}

}  // namespace slev
