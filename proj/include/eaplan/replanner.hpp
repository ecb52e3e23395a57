#pragma once

// Online re-planning and re-scheduling: an output MPC over the computation
// parameters, the battery-drain horizon, and a greedy update of the path
// parameters against the remaining coverage time.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "eaplan/battery.hpp"
#include "eaplan/coverage_planner.hpp"
#include "eaplan/energy_model.hpp"
#include "eaplan/error.hpp"
#include "eaplan/estimator.hpp"

namespace eaplan {

struct MpcConfig {
  double horizon = 6.0;      // N, seconds
  double fine_step = 0.01;   // h on the prediction grid
  double replan_step = 1.0;  // h on the re-planning grid
  Eigen::MatrixXd Q;         // m x m; empty means zero
  Eigen::MatrixXd Q_f;       // m x m; empty means zero
  Eigen::MatrixXd R;         // n x n over normalized parameters; empty means identity
  double solver_tolerance = 1e-6;
  int max_iterations = 500;
  double max_lookahead = 3600.0;  // cap on the battery-drain search, seconds

  int steps() const { return std::max(1, static_cast<int>(std::lround(horizon / fine_step))); }
};

inline void validate(const MpcConfig& cfg) {
  if (!(cfg.horizon > 0.0) || !(cfg.fine_step > 0.0) || !(cfg.replan_step > 0.0))
    throw Error(Errc::InvalidArgument, "horizon and steps must be positive");
  if (!(cfg.solver_tolerance > 0.0)) throw Error(Errc::InvalidArgument, "solver tolerance must be positive");
}

/// Solution of the scheduling problem on the grid t, t+h, ..., t+N. Control k
/// is applied on [t + k h, t + (k+1) h); outputs are predicted at all K+1
/// grid points.
struct MpcResult {
  std::vector<std::vector<double>> compute_traj;  // K x sigma, continuous values
  std::vector<double> y_pred;                     // K + 1
  EnergyState q_final;
  double objective = 0.0;
  int iterations = 0;
};

namespace detail {

/// Per-control feasible slab lo <= a . z <= hi with z in [0,1]^sigma.
struct Slab {
  Eigen::VectorXd a;
  double lo = 0.0;
  double hi = 0.0;
};

inline bool slab_feasible(const Slab& s) {
  const double min_v = s.a.cwiseMin(0.0).sum();
  const double max_v = s.a.cwiseMax(0.0).sum();
  return s.lo <= s.hi && s.hi >= min_v - 1e-12 && s.lo <= max_v + 1e-12;
}

/// Euclidean projection onto [0,1]^sigma intersected with the slab.
inline Eigen::VectorXd project(const Eigen::VectorXd& x, const Slab& s) {
  if (x.size() == 1 && s.a(0) != 0.0) {
    double lo = s.lo / s.a(0);
    double hi = s.hi / s.a(0);
    if (lo > hi) std::swap(lo, hi);
    lo = std::max(lo, 0.0);
    hi = std::min(hi, 1.0);
    return Eigen::VectorXd::Constant(1, std::clamp(x(0), lo, std::max(lo, hi)));
  }
  Eigen::VectorXd z = x.cwiseMax(0.0).cwiseMin(1.0);
  const double v = s.a.dot(z);
  if (v >= s.lo && v <= s.hi) return z;
  const double target = v < s.lo ? s.lo : s.hi;
  auto shifted = [&](double lambda) { return (x - lambda * s.a).cwiseMax(0.0).cwiseMin(1.0).eval(); };
  // a . clamp(x - lambda a) is non-increasing in lambda
  double lo = -1.0;
  double hi = 1.0;
  while (s.a.dot(shifted(lo)) < target && lo > -1e12) lo *= 2.0;
  while (s.a.dot(shifted(hi)) > target && hi < 1e12) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (s.a.dot(shifted(mid)) > target)
      lo = mid;
    else
      hi = mid;
  }
  return shifted(0.5 * (lo + hi));
}

/// Quadratic scheduling problem in normalized compute parameters z.
struct ScheduleProblem {
  int K = 0;
  int sigma = 0;
  int rho = 0;
  double h = 0.0;
  double period = 0.0;
  std::vector<EnergyState> q_free;  // K + 1 zero-input states
  Eigen::VectorXd a;                // output change per unit z
  double offset = 0.0;              // output change at z = 0 relative to c_prev
  Eigen::VectorXd path_norm;        // normalized path parameters (fixed)
  Eigen::MatrixXd Q, Q_f, R;
  std::vector<Slab> slabs;

  EnergyState state(int k, const Eigen::VectorXd& z) const {
    EnergyState q = q_free[static_cast<std::size_t>(k)];
    q(0) += period * (a.dot(z) + offset);
    return q;
  }

  double stage_cost(int k, const Eigen::VectorXd& z) const {
    const EnergyState q = state(k, z);
    Eigen::VectorXd c(rho + sigma);
    c << path_norm, z;
    return h * (q.dot(Q * q) + c.dot(R * c));
  }

  double objective(const std::vector<Eigen::VectorXd>& z) const {
    double j = 0.0;
    for (int k = 0; k < K; ++k) j += stage_cost(k, z[static_cast<std::size_t>(k)]);
    const EnergyState qf = state(K, z[static_cast<std::size_t>(K - 1)]);
    return j + qf.dot(Q_f * qf);
  }

  std::vector<Eigen::VectorXd> gradient(const std::vector<Eigen::VectorXd>& z) const {
    std::vector<Eigen::VectorXd> g(static_cast<std::size_t>(K));
    const Eigen::MatrixXd Rs = R + R.transpose();
    for (int k = 0; k < K; ++k) {
      const auto& zk = z[static_cast<std::size_t>(k)];
      const EnergyState q = state(k, zk);
      Eigen::VectorXd c(rho + sigma);
      c << path_norm, zk;
      Eigen::VectorXd gk = h * ((Q + Q.transpose()) * q)(0) * period * a + h * (Rs * c).tail(sigma);
      if (k == K - 1) {
        const EnergyState qf = state(K, zk);
        gk += ((Q_f + Q_f.transpose()) * qf)(0) * period * a;
      }
      g[static_cast<std::size_t>(k)] = gk;
    }
    return g;
  }
};

/// Projected gradient ascent with Armijo backtracking from one start point.
inline std::optional<std::pair<std::vector<Eigen::VectorXd>, int>> ascend(const ScheduleProblem& p,
                                                                          std::vector<Eigen::VectorXd> z,
                                                                          double tol, int max_iter) {
  for (int k = 0; k < p.K; ++k) z[static_cast<std::size_t>(k)] = project(z[static_cast<std::size_t>(k)], p.slabs[static_cast<std::size_t>(k)]);
  double f = p.objective(z);
  for (int it = 1; it <= max_iter; ++it) {
    const auto g = p.gradient(z);
    double step = 1.0;
    std::vector<Eigen::VectorXd> next(z.size());
    double f_next = f;
    double moved = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      double directional = 0.0;
      moved = 0.0;
      for (int k = 0; k < p.K; ++k) {
        const auto i = static_cast<std::size_t>(k);
        next[i] = project(z[i] + step * g[i], p.slabs[i]);
        directional += g[i].dot(next[i] - z[i]);
        moved = std::max(moved, (next[i] - z[i]).cwiseAbs().maxCoeff());
      }
      f_next = p.objective(next);
      if (f_next >= f + 1e-4 * directional) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || moved <= tol) return std::make_pair(accepted ? next : z, it);
    z = std::move(next);
    f = f_next;
  }
  return std::nullopt;
}

inline Eigen::MatrixXd or_default(const Eigen::MatrixXd& mat, int rows, bool identity) {
  if (mat.size() != 0) {
    if (mat.rows() != rows || mat.cols() != rows) throw Error(Errc::LengthMismatch, "cost matrix has the wrong shape");
    return mat;
  }
  if (identity) return Eigen::MatrixXd::Identity(rows, rows);
  return Eigen::MatrixXd::Zero(rows, rows);
}

}  // namespace detail

/// Maximizes l_f(q(t+N)) + sum_k l_d(q(k), c(k)) over the computation
/// parameters, subject to the harmonic dynamics, the output cap
/// y in [0, b0 Q_c V] with b frozen at b0, and the parameter boxes.
inline MpcResult solve_schedule_mpc(const EnergyModel& model, const Estimate& estimate, const BatteryParams& battery,
                                    const BatteryState& battery_state, const ParamBounds& bounds, const MpcConfig& cfg,
                                    const ParamVector& c_prev, const ScalingFactors& scaling) {
  validate(cfg);
  const int sigma = static_cast<int>(bounds.compute.size());
  const int rho = static_cast<int>(bounds.path.size());
  if (static_cast<int>(c_prev.compute.size()) != sigma || static_cast<int>(c_prev.path.size()) != rho ||
      static_cast<int>(scaling.size()) != rho + sigma || model.sigma != sigma || model.rho != rho)
    throw Error(Errc::LengthMismatch, "parameter, bound, scaling and model sizes disagree");
  if (!estimate.q_hat.allFinite()) throw Error(Errc::InvalidArgument, "state estimate is not finite");

  detail::ScheduleProblem p;
  p.K = cfg.steps();
  p.sigma = sigma;
  p.rho = rho;
  p.h = cfg.fine_step;
  p.period = model.period;
  p.Q = detail::or_default(cfg.Q, model.m(), false);
  p.Q_f = detail::or_default(cfg.Q_f, model.m(), false);
  p.R = detail::or_default(cfg.R, rho + sigma, true);
  p.a.resize(sigma);
  p.offset = 0.0;
  for (int s = 0; s < sigma; ++s) {
    const auto& b = bounds.compute[static_cast<std::size_t>(s)];
    const double nu = scaling.nu[static_cast<std::size_t>(rho + s)];
    p.a(s) = nu * b.width();
    p.offset += nu * (b.lo - c_prev.compute[static_cast<std::size_t>(s)]);
  }
  p.path_norm.resize(rho);
  for (int j = 0; j < rho; ++j) {
    const auto& b = bounds.path[static_cast<std::size_t>(j)];
    p.path_norm(j) = b.width() > 0.0 ? b.normalize(c_prev.path[static_cast<std::size_t>(j)]) : 0.0;
  }

  p.q_free.reserve(static_cast<std::size_t>(p.K + 1));
  EnergyState q = estimate.q_hat;
  const double cap = max_power(battery, battery_state);
  const Propagator advance(model, cfg.fine_step);
  std::vector<double> y_free;
  for (int k = 0; k <= p.K; ++k) {
    p.q_free.push_back(q);
    y_free.push_back(output(model, q));
    advance(q);
  }
  p.slabs.resize(static_cast<std::size_t>(p.K));
  for (int k = 0; k < p.K; ++k) {
    auto& slab = p.slabs[static_cast<std::size_t>(k)];
    slab.a = p.a;
    // y = y_free + a.z + offset must stay in [0, cap] at point k, and for the
    // last control also at the final point
    slab.lo = -std::numeric_limits<double>::infinity();
    slab.hi = std::numeric_limits<double>::infinity();
    for (int pt : {k, k == p.K - 1 ? p.K : k}) {
      const double yf = y_free[static_cast<std::size_t>(pt)] + p.offset;
      slab.lo = std::max(slab.lo, 0.0 - yf);
      slab.hi = std::min(slab.hi, cap - yf);
    }
    if (!detail::slab_feasible(slab))
      throw Error(Errc::Infeasible, "power cap " + csv::fmt(cap) + " W below the lowest-configuration prediction");
  }

  // Maximizing a convex quadratic: run from the upper corner, the lower corner
  // and the previous schedule, keep the best stationary point.
  std::vector<std::vector<Eigen::VectorXd>> starts;
  starts.emplace_back(static_cast<std::size_t>(p.K), Eigen::VectorXd::Ones(sigma));
  starts.emplace_back(static_cast<std::size_t>(p.K), Eigen::VectorXd::Zero(sigma));
  Eigen::VectorXd prev_z(sigma);
  for (int s = 0; s < sigma; ++s)
    prev_z(s) = bounds.compute[static_cast<std::size_t>(s)].width() > 0.0
                    ? bounds.compute[static_cast<std::size_t>(s)].normalize(c_prev.compute[static_cast<std::size_t>(s)])
                    : 0.0;
  starts.emplace_back(static_cast<std::size_t>(p.K), prev_z);

  MpcResult result;
  result.objective = -std::numeric_limits<double>::infinity();
  std::optional<std::vector<Eigen::VectorXd>> best;
  int total_iterations = 0;
  for (auto& start : starts) {
    const auto solved = detail::ascend(p, std::move(start), cfg.solver_tolerance, cfg.max_iterations);
    if (!solved) {
      total_iterations += cfg.max_iterations;
      continue;
    }
    total_iterations += solved->second;
    const double f = p.objective(solved->first);
    if (f > result.objective) {
      result.objective = f;
      best = solved->first;
    }
  }
  result.iterations = total_iterations;
  if (!best) throw Error(Errc::SolverFailure, "projected gradient did not converge");

  result.compute_traj.resize(static_cast<std::size_t>(p.K));
  for (int k = 0; k < p.K; ++k) {
    auto& ck = result.compute_traj[static_cast<std::size_t>(k)];
    for (int s = 0; s < sigma; ++s) {
      const auto& b = bounds.compute[static_cast<std::size_t>(s)];
      ck.push_back(b.clamp(b.lo + (*best)[static_cast<std::size_t>(k)](s) * b.width()));
    }
  }
  for (int k = 0; k <= p.K; ++k) {
    const auto& zk = (*best)[static_cast<std::size_t>(std::min(k, p.K - 1))];
    result.y_pred.push_back(output(model, p.state(k, zk)));
  }
  result.q_final = p.state(p.K, (*best)[static_cast<std::size_t>(p.K - 1)]);
  return result;
}

/// Outputs and final state on the MPC grid when the computation parameters
/// are held at `compute` (used when the optimizer is bypassed).
inline MpcResult hold_schedule(const EnergyModel& model, const Estimate& estimate, const MpcConfig& cfg,
                               const ParamVector& c_prev, const std::vector<double>& compute,
                               const ScalingFactors& scaling) {
  const int K = cfg.steps();
  const int rho = static_cast<int>(c_prev.path.size());
  double shift = 0.0;
  for (std::size_t s = 0; s < compute.size(); ++s)
    shift += scaling.nu[static_cast<std::size_t>(rho) + s] * (compute[s] - c_prev.compute[s]);
  MpcResult r;
  EnergyState q = estimate.q_hat;
  q(0) += model.period * shift;
  const Propagator advance(model, cfg.fine_step);
  for (int k = 0; k <= K; ++k) {
    r.y_pred.push_back(output(model, q));
    if (k < K) {
      r.compute_traj.push_back(compute);
      advance(q);
    }
  }
  r.q_final = q;
  return r;
}

struct DrainHorizon {
  double t_b = 0.0;
  bool capped = false;
};

/// Time until the SoC reaches zero: outputs on the MPC grid first, then the
/// zero-input model from the final MPC state, stepped at the fine step.
inline DrainHorizon battery_time_horizon(const EnergyModel& model, const MpcResult& traj, const BatteryParams& battery,
                                         const BatteryState& state, const MpcConfig& cfg) {
  const double h = cfg.fine_step;
  BatteryState b = state;
  if (b.soc <= 0.0) return {0.0, false};
  double elapsed = 0.0;
  std::size_t k = 0;
  EnergyState q = traj.q_final;
  const Propagator advance(model, h);
  while (elapsed < cfg.max_lookahead) {
    double y = 0.0;
    if (k < traj.y_pred.size()) {
      y = traj.y_pred[k];
    } else {
      advance(q);
      y = output(model, q);
    }
    b = step_soc(battery, b, std::max(y, 0.0), h);
    elapsed += h;
    ++k;
    if (b.soc <= 0.0) return {elapsed, false};
  }
  return {cfg.max_lookahead, true};
}

struct RemainingTime {
  double t_r = 0.0;
  bool clamped = false;
};

/// t_r = sum_j (nu_j c_j + tau_j) - t over the path parameters.
inline RemainingTime remaining_coverage_time(const std::vector<double>& c_path, const ScalingFactors& path_scaling,
                                             double t) {
  if (c_path.size() > path_scaling.size()) throw Error(Errc::LengthMismatch, "more path parameters than factors");
  double total = 0.0;
  for (std::size_t j = 0; j < c_path.size(); ++j) total += path_scaling.apply(j, c_path[j]);
  const double t_r = total - t;
  if (t_r < 0.0) return {0.0, true};
  return {t_r, false};
}

/// Remaining coverage time from the share of the coverage left to fly:
/// share * sum_j (nu_j c_j + tau_j). Matches the elapsed-time form while the
/// parameters stay constant.
inline RemainingTime remaining_coverage_time_from_share(const std::vector<double>& c_path,
                                                        const ScalingFactors& path_scaling, double share) {
  if (c_path.size() > path_scaling.size()) throw Error(Errc::LengthMismatch, "more path parameters than factors");
  double total = 0.0;
  for (std::size_t j = 0; j < c_path.size(); ++j) total += path_scaling.apply(j, c_path[j]);
  const double t_r = std::clamp(share, 0.0, 1.0) * total;
  if (t_r < 0.0) return {0.0, true};
  return {t_r, false};
}

/// Greedy path-parameter update: lower the parameters by delta while the
/// remaining coverage time exceeds the drain time (down to the lower bounds),
/// otherwise raise them by delta while the remaining time still fits.
template <typename RemainingFn>
std::vector<double> greedy_path_update(std::vector<double> c_path, double t_r, double t_b, double delta,
                                       const std::vector<Interval>& bounds, RemainingFn&& remaining) {
  if (!(delta > 0.0)) throw Error(Errc::InvalidArgument, "delta must be positive");
  if (c_path.size() != bounds.size()) throw Error(Errc::LengthMismatch, "path parameters and bounds differ");
  for (std::size_t j = 0; j < c_path.size(); ++j) c_path[j] = bounds[j].clamp(c_path[j]);

  if (t_r > t_b) {
    while (true) {
      bool moved = false;
      for (std::size_t j = 0; j < c_path.size(); ++j) {
        const double next = std::max(c_path[j] - delta, bounds[j].lo);
        moved = moved || next != c_path[j];
        c_path[j] = next;
      }
      if (!moved || remaining(c_path) <= t_b) return c_path;
    }
  }
  while (true) {
    std::vector<double> candidate = c_path;
    bool moved = false;
    for (std::size_t j = 0; j < c_path.size(); ++j) {
      candidate[j] = std::min(c_path[j] + delta, bounds[j].hi);
      moved = moved || candidate[j] != c_path[j];
    }
    if (!moved || remaining(candidate) > t_b) return c_path;
    c_path = std::move(candidate);
  }
}

/// Elapsed-time form: t_r(c) = sum_j (nu_j c_j + tau_j) - t.
inline std::vector<double> greedy_path_update(std::vector<double> c_path, double t_r, double t_b, double delta,
                                              const std::vector<Interval>& bounds, const ScalingFactors& path_scaling,
                                              double t) {
  return greedy_path_update(std::move(c_path), t_r, t_b, delta, bounds, [&](const std::vector<double>& c) {
    return remaining_coverage_time(c, path_scaling, t).t_r;
  });
}

struct ReplanDecision {
  std::vector<std::vector<double>> compute_traj;
  ParamVector params;  // path parameters and the rounded computation parameters to apply
  double t_b = 0.0;
  double t_r = 0.0;
  int solver_iters = 0;
  bool infeasible = false;
  bool solver_failed = false;
  bool lookahead_capped = false;
};

enum class RemainingMode { ElapsedTime, Progress };

struct ReplanContext {
  EnergyModel model;
  ScalingFactors scaling;  // path factors first, then compute
  ParamBounds bounds;
  MpcConfig mpc;
  BatteryParams battery;
  double delta = 250.0;
  RemainingMode remaining = RemainingMode::ElapsedTime;
};

namespace detail {

/// Largest integer configuration not above `value` per entry, lowered until
/// the predicted output over the first re-planning interval respects the cap.
inline std::vector<double> round_feasible(const ReplanContext& ctx, const Estimate& est, const ParamVector& c_prev,
                                          std::vector<double> value, double cap) {
  const int rho = static_cast<int>(c_prev.path.size());
  const int points = std::max(1, static_cast<int>(std::lround(ctx.mpc.replan_step / ctx.mpc.fine_step)));
  std::vector<double> y_free;
  EnergyState q = est.q_hat;
  const Propagator advance(ctx.model, ctx.mpc.fine_step);
  for (int k = 0; k <= points; ++k) {
    y_free.push_back(output(ctx.model, q));
    advance(q);
  }
  const double peak = *std::max_element(y_free.begin(), y_free.end());
  for (std::size_t s = 0; s < value.size(); ++s) value[s] = ctx.bounds.compute[s].clamp(std::round(value[s]));
  auto peak_with = [&](const std::vector<double>& c) {
    double shift = 0.0;
    for (std::size_t s = 0; s < c.size(); ++s)
      shift += ctx.scaling.nu[static_cast<std::size_t>(rho) + s] * (c[s] - c_prev.compute[s]);
    return peak + shift;
  };
  while (peak_with(value) > cap) {
    bool lowered = false;
    for (std::size_t s = value.size(); s-- > 0;) {
      if (value[s] > ctx.bounds.compute[s].lo) {
        value[s] -= 1.0;
        lowered = true;
        break;
      }
    }
    if (!lowered) break;
  }
  return value;
}

}  // namespace detail

/// One pass of the re-planning-scheduling loop at time t. The new path
/// parameter is applied to the plan's pending second circle when a plan is
/// given. Progress mode needs the plan and the current position; without
/// them the elapsed-time form is used.
inline ReplanDecision replan_step(const ReplanContext& ctx, double t, const Estimate& estimate,
                                  const BatteryState& battery_state, const ParamVector& current, Plan* plan = nullptr,
                                  std::optional<Point2> position = std::nullopt) {
  ReplanDecision d;
  const std::size_t rho = current.path.size();
  MpcResult traj;
  std::vector<double> compute;
  try {
    traj = solve_schedule_mpc(ctx.model, estimate, ctx.battery, battery_state, ctx.bounds, ctx.mpc, current,
                              ctx.scaling);
    d.solver_iters = traj.iterations;
    compute = detail::round_feasible(ctx, estimate, current, traj.compute_traj.front(),
                                     max_power(ctx.battery, battery_state));
  } catch (const Error& e) {
    if (e.code() == Errc::Infeasible) {
      d.infeasible = true;
      for (const auto& b : ctx.bounds.compute) compute.push_back(b.lo);
    } else if (e.code() == Errc::SolverFailure) {
      d.solver_failed = true;
      d.solver_iters = ctx.mpc.max_iterations;
      compute = current.compute;
    } else {
      throw;
    }
    traj = hold_schedule(ctx.model, estimate, ctx.mpc, current, compute, ctx.scaling);
  }
  d.compute_traj = traj.compute_traj;

  const DrainHorizon drain = battery_time_horizon(ctx.model, traj, ctx.battery, battery_state, ctx.mpc);
  d.t_b = drain.t_b;
  d.lookahead_capped = drain.capped;

  ScalingFactors path_scaling{{ctx.scaling.nu.begin(), ctx.scaling.nu.begin() + static_cast<long>(rho)},
                              {ctx.scaling.tau.begin(), ctx.scaling.tau.begin() + static_cast<long>(rho)}};
  if (ctx.remaining == RemainingMode::Progress && plan != nullptr && position && rho == 1) {
    auto remaining = [&](const std::vector<double>& c) {
      return remaining_coverage_time_from_share(c, path_scaling, remaining_share(*plan, *position, c.front())).t_r;
    };
    d.t_r = remaining(current.path);
    d.params.path = greedy_path_update(current.path, d.t_r, d.t_b, ctx.delta, ctx.bounds.path, remaining);
  } else {
    d.t_r = remaining_coverage_time(current.path, path_scaling, t).t_r;
    d.params.path = greedy_path_update(current.path, d.t_r, d.t_b, ctx.delta, ctx.bounds.path, path_scaling, t);
  }
  d.params.compute = compute;
  if (plan != nullptr && !d.params.path.empty()) set_path_parameter(*plan, d.params.path.front());
  return d;
}

}  // namespace eaplan
