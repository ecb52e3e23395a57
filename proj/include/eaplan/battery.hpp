#pragma once

// Rint equivalent-circuit battery: an ideal source V behind a series
// resistance R_r.

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "eaplan/error.hpp"

namespace eaplan {

struct BatteryParams {
  double v = 0.0;      // internal voltage, V
  double v_s = 0.0;    // load-side supply voltage, V (does not enter the current)
  double r_r = 0.0;    // internal resistance, ohm
  double q_c = 0.0;    // nominal capacity, Ah
  double k_b = 1.0;    // battery coefficient
  /// Optional (soc, V) table; when non-empty it replaces v.
  std::vector<std::pair<double, double>> voltage_table;

  double voltage_at(double soc) const {
    if (voltage_table.empty()) return v;
    if (soc <= voltage_table.front().first) return voltage_table.front().second;
    if (soc >= voltage_table.back().first) return voltage_table.back().second;
    auto hi = std::lower_bound(voltage_table.begin(), voltage_table.end(), soc,
                               [](const auto& e, double s) { return e.first < s; });
    auto lo = hi - 1;
    return lo->second + (hi->second - lo->second) * (soc - lo->first) / (hi->first - lo->first);
  }
};

struct BatteryState {
  double soc = 1.0;
};

inline void validate(const BatteryParams& p) {
  if (!(p.v > 0.0 && p.v_s > 0.0 && p.r_r > 0.0 && p.q_c > 0.0 && p.k_b > 0.0))
    throw Error(Errc::InvalidArgument, "battery parameters must be strictly positive");
}

/// Internal current for a load y, taking the root that vanishes at y = 0.
inline double internal_current(double voltage, double r_r, double y) {
  if (y < 0.0) throw Error(Errc::InvalidArgument, "load must be non-negative");
  const double disc = voltage * voltage - 4.0 * r_r * y;
  if (disc < 0.0) throw Error(Errc::InfeasibleLoad, "load exceeds the deliverable power V^2 / (4 R_r)");
  // (V - sqrt(disc)) / (2 R) rewritten to avoid cancellation for small loads
  return 2.0 * y / (voltage + std::sqrt(disc));
}

inline double internal_current(const BatteryParams& p, double y) { return internal_current(p.v, p.r_r, y); }

inline double internal_current(const BatteryParams& p, const BatteryState& s, double y) {
  return internal_current(p.voltage_at(s.soc), p.r_r, y);
}

/// SoC rate in 1/s; capacity converted from Ah to As.
inline double soc_rate(const BatteryParams& p, double y) { return -p.k_b * internal_current(p, y) / (p.q_c * 3600.0); }

inline double soc_rate(const BatteryParams& p, const BatteryState& s, double y) {
  return -p.k_b * internal_current(p, s, y) / (p.q_c * 3600.0);
}

/// Forward-Euler SoC update, clamped to [0, 1].
inline BatteryState step_soc(const BatteryParams& p, const BatteryState& s, double y, double h) {
  if (!(h > 0.0)) throw Error(Errc::InvalidArgument, "step must be positive");
  return {std::clamp(s.soc + h * soc_rate(p, s, y), 0.0, 1.0)};
}

/// Output cap b * Q_c * V used as the admissible power set [0, cap]. Q_c is
/// in Ah, so the product is numerically a capacity-voltage figure.
inline double max_power(const BatteryParams& p, const BatteryState& s) {
  return s.soc * p.q_c * p.voltage_at(s.soc);
}

}  // namespace eaplan
