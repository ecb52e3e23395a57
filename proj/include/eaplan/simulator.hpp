#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "eaplan/battery.hpp"
#include "eaplan/compute_energy.hpp"
#include "eaplan/coverage_planner.hpp"
#include "eaplan/csv.hpp"
#include "eaplan/energy_model.hpp"
#include "eaplan/error.hpp"
#include "eaplan/estimator.hpp"
#include "eaplan/replanner.hpp"
#include "eaplan/scenario.hpp"
#include "eaplan/tracker.hpp"

namespace eaplan {

enum class Termination { Completed, BatteryExhausted, MaxTime };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::Completed: return "Completed";
    case Termination::BatteryExhausted: return "BatteryExhausted";
    case Termination::MaxTime: return "MaxTime";
  }
  return "?";
}

inline int exit_code(Termination t) {
  switch (t) {
    case Termination::Completed: return 0;
    case Termination::BatteryExhausted: return 2;
    case Termination::MaxTime: return 4;
  }
  return 1;
}

struct TelemetryRow {
  double t = 0.0;
  Point2 position;
  std::size_t stage = 0;
  double soc = 0.0;
  double upsilon = 0.0;
  double y_hat = 0.0;
  std::vector<double> q;
  double c1 = 0.0;
  double c2 = 0.0;
  double t_b = 0.0;
  double t_r = 0.0;
  int solver_iters = 0;
  bool infeasible = false;
  bool replan_tick = false;
};

struct Telemetry {
  std::vector<TelemetryRow> rows;
  Termination termination = Termination::MaxTime;
  double final_soc = 0.0;
  std::size_t final_stage_count = 0;
  int state_size = 0;
};

struct SimulationResult {
  Telemetry telemetry;
  std::vector<Stage> stages;
  double t_lower = 0.0;
  double t_upper = 0.0;
  ScalingFactors scaling;
};

/// Ground-truth power: the truth Fourier series, the profile's prediction at
/// the current computation parameter, and Gaussian noise.
inline double synth_power(double t, const FourierCoefficients& truth, double period, const ComputeProfile& profile,
                          const ParamVector& c, double noise_sigma, std::mt19937_64& rng) {
  double y = fourier_value(truth, period, t) + predict(profile, c.compute.at(0));
  if (noise_sigma > 0.0) y += std::normal_distribution<double>(0.0, noise_sigma)(rng);
  return y;
}

inline Plan build_plan(const Scenario& s, double c1) {
  const Polygon region = s.region();
  const Point2 start = s.start.value_or(default_start(region, s.shift_vector()));
  return generate_plan(region, s.radius, s.min_radius, s.shift_vector(), start, s.altitude, s.bounds,
                       PlanOptions{s.epsilon, c1});
}

inline Pose initial_pose(const Plan& plan, double airspeed, const Wind& wind) {
  const Stage& first = plan.stages.front();
  return {first.entry, heading_for_course(first.path.direction, airspeed, wind)};
}

/// Flight time of the whole plan at a fixed path parameter.
inline double coverage_time(const Scenario& s, double c1) {
  Plan plan = build_plan(s, c1);
  const TrackerGains gains = default_gains(s.min_radius, s.airspeed, s.wind.speed);
  const double h = s.mpc.fine_step;
  Pose pose = initial_pose(plan, s.airspeed, s.wind);
  const auto max_steps = static_cast<std::int64_t>(std::ceil(s.max_time / h));
  for (std::int64_t k = 1; k <= max_steps; ++k) {
    pose = follow_path(pose, plan.current(), s.airspeed, s.wind, h, gains);
    plan.current_index = stage_transition(plan, pose.position);
    if (plan.complete()) return static_cast<double>(k) * h;
  }
  throw Error(Errc::ScenarioInvalid, "plan at c1 = " + csv::fmt(c1) + " not completed within sim.max_time");
}

inline EstimatorConfig estimator_config(const Scenario& s, const EnergyModel& model, double mean_power) {
  const double scale = mean_power * model.period;
  EstimatorConfig cfg;
  cfg.process_noise = s.process_scale * scale * scale * Eigen::MatrixXd::Identity(model.m(), model.m());
  cfg.initial_covariance = s.initial_scale * scale * scale * Eigen::MatrixXd::Identity(model.m(), model.m());
  double sigma = 0.01 * mean_power;
  if (s.measurement_sigma)
    sigma = *s.measurement_sigma;
  else if (s.noise_sigma > 0.0)
    sigma = s.noise_sigma;
  cfg.measurement_noise = sigma * sigma;
  return cfg;
}

/// Flies the scenario at the fine step. Battery events are instantaneous SoC
/// drops; when `adaptive` is set the re-planning loop runs on the re-planning
/// grid, otherwise the initial parameters are held.
inline SimulationResult run_scenario(const Scenario& s, bool adaptive) {
  validate(s);
  SimulationResult result;
  const double h = s.mpc.fine_step;
  const auto replan_every = std::max<std::int64_t>(1, std::llround(s.mpc.replan_step / h));

  const Interval c1_bounds = s.bounds.path[0];
  result.t_lower = coverage_time(s, c1_bounds.lo);
  result.t_upper = coverage_time(s, c1_bounds.hi);
  const ScalingFactors path_scaling = scale_path(s.bounds.path, result.t_lower, result.t_upper);
  ScalingFactors compute_scaling;
  try {
    compute_scaling = scale_compute(s.bounds.compute, [&](double c) { return predict(s.profile, c); });
  } catch (const Error& e) {
    throw Error(Errc::ScenarioInvalid, e.what());
  }
  result.scaling = concat(path_scaling, compute_scaling);
  const ScalingFactors path_only = path_scaling;

  Plan plan = build_plan(s, s.initial.path[0]);
  ParamVector params = s.initial;

  ReplanContext ctx{build_model(s.model_order, s.model_period, 1, 1), result.scaling, s.bounds, s.mpc, s.battery,
                    s.delta, s.remaining};
  const EnergyModel& model = ctx.model;
  const double mean_power = s.truth.a[0] / s.truth_period + predict(s.profile, params.compute[0]);
  const EstimatorConfig est_cfg = estimator_config(s, model, mean_power);
  EnergyState q0 = initial_state(model, s.guess);
  q0(0) += model.period * predict(s.profile, params.compute[0]);
  Estimate est = make_estimate(model, q0, est_cfg);
  const Eigen::VectorXd no_input = Eigen::VectorXd::Zero(model.n());

  std::mt19937_64 rng(s.seed);
  BatteryState battery{s.soc0};
  std::size_t next_event = 0;
  const TrackerGains gains = default_gains(s.min_radius, s.airspeed, s.wind.speed);
  Pose pose = initial_pose(plan, s.airspeed, s.wind);

  Telemetry& tel = result.telemetry;
  tel.state_size = model.m();
  const auto max_steps = static_cast<std::int64_t>(std::ceil(s.max_time / h));
  tel.rows.reserve(static_cast<std::size_t>(std::min<std::int64_t>(max_steps, 200000)));
  double t_b = std::numeric_limits<double>::quiet_NaN();
  double t_r = std::numeric_limits<double>::quiet_NaN();

  for (std::int64_t k = 0; k < max_steps; ++k) {
    const double t = static_cast<double>(k) * h;
    TelemetryRow row;
    row.t = t;

    if (k % replan_every == 0) {
      row.replan_tick = true;
      if (adaptive) {
        const ReplanDecision d = replan_step(ctx, t, est, battery, params, &plan, pose.position);
        const Eigen::VectorXd u = control_input(params, d.params, result.scaling);
        est.q_hat = apply_change(model, est.q_hat, u);
        est.y_hat = output(model, est.q_hat);
        params = d.params;
        t_b = d.t_b;
        t_r = d.t_r;
        row.solver_iters = d.solver_iters;
        row.infeasible = d.infeasible;
      } else if (s.remaining == RemainingMode::Progress) {
        t_r = remaining_coverage_time_from_share(params.path, path_only,
                                                 remaining_share(plan, pose.position, params.path[0])).t_r;
      } else {
        t_r = remaining_coverage_time(params.path, path_only, t).t_r;
      }
    }

    const double upsilon = synth_power(t, s.truth, s.truth_period, s.profile, params, 0.0, rng);
    const double measured = s.noise_sigma > 0.0
                                ? upsilon + std::normal_distribution<double>(0.0, s.noise_sigma)(rng)
                                : upsilon;
    est = update(model, est, measured, est_cfg);

    row.position = pose.position;
    row.stage = plan.current_index;
    row.soc = battery.soc;
    row.upsilon = measured;
    row.y_hat = est.y_hat;
    row.q.assign(est.q_hat.data(), est.q_hat.data() + est.q_hat.size());
    row.c1 = params.path[0];
    row.c2 = params.compute[0];
    row.t_b = t_b;
    row.t_r = t_r;
    tel.rows.push_back(std::move(row));

    est = predict(model, est, no_input, h, est_cfg);
    while (next_event < s.events.size() && s.events[next_event].time <= t + h / 2.0) {
      battery.soc = std::max(0.0, battery.soc - s.events[next_event].drop);
      ++next_event;
    }
    if (battery.soc > 0.0) battery = step_soc(s.battery, battery, std::max(upsilon, 0.0), h);
    pose = follow_path(pose, plan.current(), s.airspeed, s.wind, h, gains);
    plan.current_index = stage_transition(plan, pose.position);

    if (plan.complete()) {
      tel.termination = Termination::Completed;
      break;
    }
    if (battery.soc <= 0.0) {
      tel.termination = Termination::BatteryExhausted;
      break;
    }
  }
  tel.final_soc = battery.soc;
  tel.final_stage_count = plan.current_index;
  result.stages = plan.stages;
  return result;
}

/// Time-averaged weighted normalized parameters on the re-planning grid,
/// in percent, divided by the final SoC in percent.
inline double performance_metric(const Telemetry& tel, const ParamBounds& bounds, double w1, double w2,
                                 double soc_final_percent) {
  if (!(w1 >= 0.0 && w2 >= 0.0 && w1 + w2 > 0.0)) throw Error(Errc::InvalidArgument, "weights must be >= 0, sum > 0");
  if (!(soc_final_percent > 0.0)) throw Error(Errc::ZeroSoc, "final SoC is zero; the metric is undefined");
  double sum = 0.0;
  std::size_t ticks = 0;
  for (const auto& r : tel.rows) {
    if (!r.replan_tick) continue;
    sum += w1 * 100.0 * bounds.path[0].normalize(r.c1) + w2 * 100.0 * bounds.compute[0].normalize(r.c2);
    ++ticks;
  }
  if (ticks == 0) throw Error(Errc::InvalidArgument, "no re-planning ticks in the telemetry");
  return sum / (static_cast<double>(ticks) * soc_final_percent);
}

inline double performance_metric(const Telemetry& tel, const Scenario& s) {
  return performance_metric(tel, s.bounds, s.w1, s.w2, 100.0 * tel.final_soc);
}

/// Mean normalized (path, compute) parameters over the re-planning grid.
inline std::pair<double, double> mean_normalized_params(const Telemetry& tel, const ParamBounds& bounds) {
  double p = 0.0;
  double c = 0.0;
  std::size_t n = 0;
  for (const auto& r : tel.rows) {
    if (!r.replan_tick) continue;
    p += bounds.path[0].normalize(r.c1);
    c += bounds.compute[0].normalize(r.c2);
    ++n;
  }
  if (n == 0) return {0.0, 0.0};
  return {p / static_cast<double>(n), c / static_cast<double>(n)};
}

inline void write_telemetry_csv(std::ostream& out, const Telemetry& tel) {
  out << "t,x,y,stage,soc,upsilon_w,y_hat_w";
  for (int i = 0; i < tel.state_size; ++i) out << ",q" << i;
  out << ",c1,c2,t_b,t_r,solver_iters,infeasible_flag\n";
  std::string line;
  for (const auto& r : tel.rows) {
    line.clear();
    auto put = [&](double v) {
      line += csv::fmt(v);
      line += ',';
    };
    put(r.t);
    put(r.position.x);
    put(r.position.y);
    line += std::to_string(r.stage);
    line += ',';
    put(r.soc);
    put(r.upsilon);
    put(r.y_hat);
    for (double q : r.q) put(q);
    put(r.c1);
    put(r.c2);
    put(r.t_b);
    put(r.t_r);
    line += std::to_string(r.solver_iters);
    line += ',';
    line += r.infeasible ? '1' : '0';
    line += '\n';
    out << line;
  }
}

/// Rows on the re-planning grid only.
inline void write_replan_csv(std::ostream& out, const Telemetry& tel) {
  out << "t,c1,c2,t_b,t_r,solver_iters,infeasible_flag,soc\n";
  for (const auto& r : tel.rows) {
    if (!r.replan_tick) continue;
    out << csv::fmt(r.t) << ',' << csv::fmt(r.c1) << ',' << csv::fmt(r.c2) << ',' << csv::fmt(r.t_b) << ','
        << csv::fmt(r.t_r) << ',' << r.solver_iters << ',' << (r.infeasible ? 1 : 0) << ',' << csv::fmt(r.soc) << '\n';
  }
}

/// Trajectory over the region on the left, SoC and power traces on the right.
inline void write_svg(std::ostream& out, const Scenario& s, const Telemetry& tel) {
  const Polygon region = s.region();
  double min_x = region.min_x();
  double max_x = region.max_x();
  double min_y = region.min_y();
  double max_y = region.max_y();
  for (const auto& r : tel.rows) {
    min_x = std::min(min_x, r.position.x);
    max_x = std::max(max_x, r.position.x);
    min_y = std::min(min_y, r.position.y);
    max_y = std::max(max_y, r.position.y);
  }
  const double size = 480.0;
  const double span = std::max(max_x - min_x, max_y - min_y);
  auto px = [&](Point2 p) {
    return csv::fmt(10.0 + (p.x - min_x) / span * size) + "," + csv::fmt(10.0 + (max_y - p.y) / span * size);
  };
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"1000\" height=\"500\">\n";
  out << "<polygon fill=\"#eef\" stroke=\"#446\" points=\"";
  for (auto v : region.vertices()) out << px(v) << ' ';
  out << "\"/>\n<polyline fill=\"none\" stroke=\"#c30\" stroke-width=\"1\" points=\"";
  const std::size_t stride = std::max<std::size_t>(1, tel.rows.size() / 4000);
  for (std::size_t i = 0; i < tel.rows.size(); i += stride) out << px(tel.rows[i].position) << ' ';
  out << "\"/>\n";
  if (!tel.rows.empty()) {
    const double t_end = std::max(tel.rows.back().t, 1.0);
    double p_max = 1.0;
    for (const auto& r : tel.rows) p_max = std::max(p_max, r.upsilon);
    auto trace = [&](const char* color, auto value, double top) {
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
      for (std::size_t i = 0; i < tel.rows.size(); i += stride) {
        const double x = 510.0 + tel.rows[i].t / t_end * 480.0;
        const double y = 490.0 - std::clamp(value(tel.rows[i]) / top, 0.0, 1.0) * 480.0;
        out << csv::fmt(x) << ',' << csv::fmt(y) << ' ';
      }
      out << "\"/>\n";
    };
    trace("#07a", [](const TelemetryRow& r) { return r.soc; }, 1.0);
    trace("#999", [](const TelemetryRow& r) { return r.upsilon; }, p_max);
    trace("#093", [](const TelemetryRow& r) { return r.y_hat; }, p_max);
  }
  out << "</svg>\n";
}

}  // namespace eaplan
