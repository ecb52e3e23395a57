#pragma once

// Flat key-value scenario files.
//
//   # comment
//   key = value          scalars, or quoted / bare strings
//   key = [v1, v2, ...]  numeric arrays
//
// Every key is listed in scenario_keys(); unknown keys are rejected.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eaplan/battery.hpp"
#include "eaplan/compute_energy.hpp"
#include "eaplan/coverage_planner.hpp"
#include "eaplan/csv.hpp"
#include "eaplan/energy_model.hpp"
#include "eaplan/error.hpp"
#include "eaplan/replanner.hpp"
#include "eaplan/tracker.hpp"

namespace eaplan {

struct BatteryEvent {
  double time = 0.0;
  double drop = 0.0;  // SoC fraction removed instantly
};

struct Scenario {
  std::uint64_t seed = 1;
  std::vector<Point2> polygon;
  double radius = 0.0;
  double min_radius = 0.0;
  double shift = 0.0;
  std::optional<Point2> start;
  double altitude = 100.0;
  double epsilon = std::numeric_limits<double>::quiet_NaN();

  double airspeed = 0.0;
  Wind wind;

  BatteryParams battery;
  double soc0 = 1.0;
  std::vector<BatteryEvent> events;

  ParamBounds bounds;
  ParamVector initial;

  double truth_period = 0.0;
  FourierCoefficients truth;
  int model_order = 3;
  double model_period = 0.0;
  FourierCoefficients guess;  // motion part of the initial estimate

  ComputeProfile profile;
  std::string profile_path;
  double noise_sigma = 0.0;

  double process_scale = 1e-4;
  double initial_scale = 1e-2;
  std::optional<double> measurement_sigma;

  MpcConfig mpc;
  double delta = 250.0;
  RemainingMode remaining = RemainingMode::Progress;
  double w1 = 0.5;
  double w2 = 0.5;
  double max_time = 3600.0;

  Polygon region() const { return Polygon::from_points(polygon); }
  Point2 shift_vector() const { return {shift, 0.0}; }
};

inline const std::vector<std::string>& scenario_keys() {
  static const std::vector<std::string> keys{
      "seed",          "polygon.x",        "polygon.y",           "plan.radius",      "plan.min_radius",
      "plan.shift",    "plan.start",       "plan.altitude",       "plan.epsilon",     "airspeed",
      "wind.speed",    "wind.direction_deg", "battery.v",         "battery.vs",       "battery.rr",
      "battery.qc_ah", "battery.kb",       "battery.soc0",        "battery.table_soc", "battery.table_v",
      "events.time",   "events.drop",      "params.c1",           "params.c2",        "bounds.c1",
      "bounds.c2",     "fourier.period",   "fourier.a",           "fourier.b",        "model.order",
      "model.period",  "model.guess_a",    "model.guess_b",       "profile",          "noise_sigma",
      "estimator.process_scale", "estimator.initial_scale", "estimator.measurement_sigma", "mpc.horizon",
      "mpc.fine_step", "mpc.replan_step",  "mpc.tolerance",       "mpc.max_iterations", "mpc.max_lookahead",
      "greedy.delta",  "greedy.remaining", "metric.w1",        "metric.w2",           "sim.max_time"};
  return keys;
}

namespace detail {

class KeyValues {
 public:
  explicit KeyValues(std::string_view text) {
    std::size_t start = 0;
    int line_no = 0;
    while (start <= text.size()) {
      const auto pos = text.find('\n', start);
      std::string_view line = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
      start = pos == std::string_view::npos ? text.size() + 1 : pos + 1;
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = csv::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) fail(line_no, "expected key = value");
      const std::string key(csv::trim(line.substr(0, eq)));
      const std::string value(csv::trim(line.substr(eq + 1)));
      if (key.empty()) fail(line_no, "empty key");
      const auto& known = scenario_keys();
      if (std::find(known.begin(), known.end(), key) == known.end()) fail(line_no, "unknown key '" + key + "'");
      if (values_.count(key)) fail(line_no, "duplicate key '" + key + "'");
      values_[key] = value;
    }
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  const std::string& raw(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw Error(Errc::ScenarioInvalid, "missing key '" + key + "'");
    return it->second;
  }

  double number(const std::string& key) const {
    try {
      return csv::parse_double(raw(key));
    } catch (const Error& e) {
      if (e.code() == Errc::ScenarioInvalid) throw;
      throw Error(Errc::ScenarioInvalid, key + ": " + e.what());
    }
  }

  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

  std::vector<double> array(const std::string& key) const {
    std::string_view v = raw(key);
    if (v.size() < 2 || v.front() != '[' || v.back() != ']') throw Error(Errc::ScenarioInvalid, key + ": expected [..]");
    v = csv::trim(v.substr(1, v.size() - 2));
    std::vector<double> out;
    if (v.empty()) return out;
    try {
      for (auto f : csv::split(v)) out.push_back(csv::parse_double(f));
    } catch (const Error& e) {
      throw Error(Errc::ScenarioInvalid, key + ": " + e.what());
    }
    return out;
  }

  std::vector<double> array(const std::string& key, std::vector<double> fallback) const {
    return has(key) ? array(key) : std::move(fallback);
  }

  std::string text(const std::string& key) const {
    std::string v = raw(key);
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
    return v;
  }

 private:
  [[noreturn]] static void fail(int line, const std::string& what) {
    throw Error(Errc::ScenarioInvalid, "line " + std::to_string(line) + ": " + what);
  }

  std::map<std::string, std::string> values_;
};

inline Interval interval_of(const std::vector<double>& v, const std::string& key) {
  if (v.size() != 2) throw Error(Errc::ScenarioInvalid, key + ": expected [lower, upper]");
  return {v[0], v[1]};
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::ScenarioInvalid, what);
}

}  // namespace detail

/// Checks the cross-field invariants of a scenario.
inline void validate(const Scenario& s) {
  using detail::require;
  try {
    (void)s.region();
    validate(s.battery);
    validate(s.profile);
  } catch (const Error& e) {
    throw Error(Errc::ScenarioInvalid, e.what());
  }
  require(s.airspeed > s.wind.speed && s.wind.speed >= 0.0, "airspeed must exceed the wind speed");
  require(s.radius > s.min_radius && s.min_radius > 0.0, "need plan.radius > plan.min_radius > 0");
  require(s.shift > 0.0, "plan.shift must be positive");
  require(s.soc0 > 0.0 && s.soc0 <= 1.0, "battery.soc0 must lie in (0, 1]");
  for (std::size_t i = 0; i < s.events.size(); ++i) {
    require(s.events[i].drop >= 0.0 && s.events[i].drop <= 1.0, "event drops must lie in [0, 1]");
    require(i == 0 || s.events[i].time >= s.events[i - 1].time, "events must be sorted by time");
  }
  require(s.bounds.path.size() == 1 && s.bounds.compute.size() == 1, "expected one path and one compute parameter");
  require(s.bounds.path[0].lo < s.bounds.path[0].hi && s.bounds.compute[0].lo < s.bounds.compute[0].hi,
          "bounds must satisfy lower < upper");
  require(s.bounds.path[0].lo > s.min_radius * s.min_radius - s.radius * s.radius && s.bounds.path[0].hi <= 0.0,
          "bounds.c1 must lie in (r_min^2 - r^2, 0]");
  require(s.bounds.compute[0].lo >= s.profile.min_param() && s.bounds.compute[0].hi <= s.profile.max_param(),
          "bounds.c2 must lie within the measured profile");
  require(within_bounds(s.initial, s.bounds), "initial parameters outside the bounds");
  require(s.truth_period > 0.0 && s.model_period > 0.0, "periods must be positive");
  require(s.model_order >= 1, "model.order must be >= 1");
  require(static_cast<int>(s.guess.a.size()) == s.model_order + 1 &&
              static_cast<int>(s.guess.b.size()) == s.model_order,
          "model guess must have order + 1 cosine and order sine terms");
  require(!s.truth.a.empty() && s.truth.b.size() + 1 == s.truth.a.size(), "fourier.a needs one more entry than fourier.b");
  require(s.noise_sigma >= 0.0, "noise_sigma must be >= 0");
  require(s.mpc.horizon > 0.0 && s.mpc.fine_step > 0.0 && s.mpc.replan_step >= s.mpc.fine_step,
          "mpc steps must be positive with replan_step >= fine_step");
  require(s.delta > 0.0, "greedy.delta must be positive");
  require(s.w1 >= 0.0 && s.w2 >= 0.0 && s.w1 + s.w2 > 0.0, "metric weights must be >= 0 with a positive sum");
  require(s.max_time > 0.0, "sim.max_time must be positive");
}

/// Parses scenario text; relative profile paths resolve against `base_dir`.
inline Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir = {}) {
  const detail::KeyValues kv(text);
  Scenario s;
  s.seed = static_cast<std::uint64_t>(kv.number("seed", 1.0));
  const auto xs = kv.array("polygon.x");
  const auto ys = kv.array("polygon.y");
  detail::require(xs.size() == ys.size(), "polygon.x and polygon.y differ in length");
  for (std::size_t i = 0; i < xs.size(); ++i) s.polygon.push_back({xs[i], ys[i]});

  s.radius = kv.number("plan.radius");
  s.min_radius = kv.number("plan.min_radius");
  s.shift = kv.number("plan.shift");
  if (kv.has("plan.start")) {
    const auto st = kv.array("plan.start");
    detail::require(st.size() == 2, "plan.start: expected [x, y]");
    s.start = Point2{st[0], st[1]};
  }
  s.altitude = kv.number("plan.altitude", s.altitude);
  s.epsilon = kv.number("plan.epsilon", s.epsilon);

  s.airspeed = kv.number("airspeed");
  s.wind.speed = kv.number("wind.speed", 0.0);
  s.wind.direction_deg = kv.number("wind.direction_deg", 0.0);

  s.battery.v = kv.number("battery.v");
  s.battery.v_s = kv.number("battery.vs", s.battery.v);
  s.battery.r_r = kv.number("battery.rr");
  s.battery.q_c = kv.number("battery.qc_ah");
  s.battery.k_b = kv.number("battery.kb", 1.0);
  s.soc0 = kv.number("battery.soc0", 1.0);
  const auto table_soc = kv.array("battery.table_soc", {});
  const auto table_v = kv.array("battery.table_v", {});
  detail::require(table_soc.size() == table_v.size(), "battery.table_soc and battery.table_v differ in length");
  for (std::size_t i = 0; i < table_soc.size(); ++i) {
    detail::require(i == 0 || table_soc[i] > table_soc[i - 1], "battery.table_soc must increase");
    s.battery.voltage_table.emplace_back(table_soc[i], table_v[i]);
  }

  const auto et = kv.array("events.time", {});
  const auto ed = kv.array("events.drop", {});
  detail::require(et.size() == ed.size(), "events.time and events.drop differ in length");
  for (std::size_t i = 0; i < et.size(); ++i) s.events.push_back({et[i], ed[i]});

  s.bounds.path = {detail::interval_of(kv.array("bounds.c1"), "bounds.c1")};
  s.bounds.compute = {detail::interval_of(kv.array("bounds.c2"), "bounds.c2")};
  s.initial.path = {kv.number("params.c1", s.bounds.path[0].hi)};
  s.initial.compute = {kv.number("params.c2", s.bounds.compute[0].hi)};

  s.truth_period = kv.number("fourier.period");
  s.truth.a = kv.array("fourier.a");
  s.truth.b = kv.array("fourier.b");
  s.model_order = static_cast<int>(kv.number("model.order", static_cast<double>(s.truth.order())));
  s.model_period = kv.number("model.period", s.truth_period);
  if (kv.has("model.guess_a") || kv.has("model.guess_b")) {
    s.guess.a = kv.array("model.guess_a");
    s.guess.b = kv.array("model.guess_b");
  } else {
    // mean power only; the harmonics are left to the estimator
    s.guess.a.assign(static_cast<std::size_t>(std::max(s.model_order, 0) + 1), 0.0);
    s.guess.b.assign(static_cast<std::size_t>(std::max(s.model_order, 0)), 0.0);
    if (!s.truth.a.empty()) s.guess.a[0] = s.truth.a[0] * s.model_period / s.truth_period;
  }

  s.profile_path = kv.text("profile");
  std::filesystem::path profile_file(s.profile_path);
  if (profile_file.is_relative() && !base_dir.empty()) profile_file = base_dir / profile_file;
  try {
    s.profile = load_profile(profile_file.string());
  } catch (const Error& e) {
    throw Error(Errc::ScenarioInvalid, std::string("profile: ") + e.what());
  }
  s.noise_sigma = kv.number("noise_sigma", 0.0);

  s.process_scale = kv.number("estimator.process_scale", s.process_scale);
  s.initial_scale = kv.number("estimator.initial_scale", s.initial_scale);
  if (kv.has("estimator.measurement_sigma")) s.measurement_sigma = kv.number("estimator.measurement_sigma");

  s.mpc.horizon = kv.number("mpc.horizon", s.mpc.horizon);
  s.mpc.fine_step = kv.number("mpc.fine_step", s.mpc.fine_step);
  s.mpc.replan_step = kv.number("mpc.replan_step", s.mpc.replan_step);
  s.mpc.solver_tolerance = kv.number("mpc.tolerance", s.mpc.solver_tolerance);
  s.mpc.max_iterations = static_cast<int>(kv.number("mpc.max_iterations", s.mpc.max_iterations));
  s.mpc.max_lookahead = kv.number("mpc.max_lookahead", s.mpc.max_lookahead);
  s.delta = kv.number("greedy.delta", s.delta);
  if (kv.has("greedy.remaining")) {
    const std::string mode = kv.text("greedy.remaining");
    if (mode == "progress")
      s.remaining = RemainingMode::Progress;
    else if (mode == "elapsed")
      s.remaining = RemainingMode::ElapsedTime;
    else
      throw Error(Errc::ScenarioInvalid, "greedy.remaining must be progress or elapsed");
  }
  s.w1 = kv.number("metric.w1", s.w1);
  s.w2 = kv.number("metric.w2", s.w2);
  s.max_time = kv.number("sim.max_time", s.max_time);

  validate(s);
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::string text;
  try {
    text = csv::read_file(path.string());
  } catch (const Error& e) {
    throw Error(Errc::ScenarioInvalid, e.what());
  }
  return parse_scenario(text, path.parent_path());
}

}  // namespace eaplan
