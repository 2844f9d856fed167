#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "slev/errors.hpp"

namespace slev {

/// Log-price observations on a (possibly non-equidistant) grid inside one
/// window [0, T]. Timestamps are strictly increasing; the returns
/// delta_i = p(t_{i+1}) - p(t_i) are materialized at construction.
class TickSeries {
 public:
  TickSeries(std::vector<double> timestamps, std::vector<double> log_prices, double horizon)
      : t_(std::move(timestamps)), p_(std::move(log_prices)), horizon_(horizon) {
    validate();
    returns_.resize(p_.size() - 1);
    for (std::size_t i = 0; i + 1 < p_.size(); ++i) returns_[i] = p_[i + 1] - p_[i];
  }

  /// Builds a series from raw ticks: stable-sorts by time and collapses equal
  /// timestamps to the last price seen at that time.
  static TickSeries from_ticks(std::vector<double> timestamps, std::vector<double> log_prices,
                               double horizon) {
    if (timestamps.size() != log_prices.size())
      throw InvalidInput("timestamps and log_prices differ in length");
    std::vector<std::size_t> order(timestamps.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return timestamps[a] < timestamps[b]; });
    std::vector<double> t;
    std::vector<double> p;
    t.reserve(order.size());
    p.reserve(order.size());
    for (std::size_t idx : order) {
      if (!t.empty() && t.back() == timestamps[idx]) {
        p.back() = log_prices[idx];
      } else {
        t.push_back(timestamps[idx]);
        p.push_back(log_prices[idx]);
      }
    }
    return TickSeries(std::move(t), std::move(p), horizon);
  }

  /// Equidistant grid t_i = i T / n, i = 0..n, with n = log_prices.size() - 1.
  static TickSeries equidistant(std::vector<double> log_prices, double horizon) {
    if (log_prices.size() < 2) throw InvalidInput("a tick series needs at least 2 observations");
    const std::size_t n = log_prices.size() - 1;
    std::vector<double> t(n + 1);
    for (std::size_t i = 0; i <= n; ++i) t[i] = static_cast<double>(i) * horizon / static_cast<double>(n);
    t[n] = horizon;
    return TickSeries(std::move(t), std::move(log_prices), horizon);
  }

  std::size_t observations() const noexcept { return p_.size(); }
  /// Number of returns n.
  std::size_t size() const noexcept { return returns_.size(); }
  double horizon() const noexcept { return horizon_; }

  std::span<const double> timestamps() const noexcept { return t_; }
  std::span<const double> log_prices() const noexcept { return p_; }
  std::span<const double> returns() const noexcept { return returns_; }

  /// Largest spacing tau(n).
  double max_spacing() const {
    double tau = 0.0;
    for (std::size_t i = 0; i + 1 < t_.size(); ++i) tau = std::max(tau, t_[i + 1] - t_[i]);
    return tau;
  }

  /// True when consecutive spacings equal T/n within rel_tol.
  bool is_equidistant(double rel_tol = 1e-9) const {
    const double h = horizon_ / static_cast<double>(size());
    for (std::size_t i = 0; i + 1 < t_.size(); ++i)
      if (std::abs((t_[i + 1] - t_[i]) - h) > rel_tol * h) return false;
    return t_.front() == 0.0 || std::abs(t_.front()) <= rel_tol * h;
  }

  /// Same path on a clock stretched by `factor` (timestamps and horizon).
  TickSeries rescaled_time(double factor) const {
    std::vector<double> t(t_);
    for (double& x : t) x *= factor;
    return TickSeries(std::move(t), p_, horizon_ * factor);
  }

  /// Every return multiplied by c; the first log-price is kept.
  TickSeries with_scaled_returns(double c) const {
    std::vector<double> p(p_.size());
    p[0] = p_[0];
    for (std::size_t i = 0; i < returns_.size(); ++i) p[i + 1] = p[i] + c * returns_[i];
    TickSeries out(t_, std::move(p), horizon_);
    for (std::size_t i = 0; i < returns_.size(); ++i) out.returns_[i] = c * returns_[i];
    return out;
  }

 private:
  void validate() const {
    if (t_.size() != p_.size()) throw InvalidInput("timestamps and log_prices differ in length");
    if (p_.size() < 2) throw InvalidInput("a tick series needs at least 2 observations");
    if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) throw InvalidInput("horizon T must be > 0");
    if (t_.front() < 0.0) throw InvalidInput("first timestamp is negative");
    if (t_.back() > horizon_) throw InvalidInput("last timestamp exceeds the horizon T");
    for (std::size_t i = 0; i < t_.size(); ++i) {
      if (!std::isfinite(t_[i]) || !std::isfinite(p_[i]))
        throw InvalidInput("non-finite value at observation " + std::to_string(i));
      if (i > 0 && !(t_[i] > t_[i - 1]))
        throw InvalidInput("timestamps must be strictly increasing (observation " + std::to_string(i) + ")");
    }
  }

  std::vector<double> t_;
  std::vector<double> p_;
  std::vector<double> returns_;
  double horizon_;
};

}  // namespace slev
