// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "eaplan/eaplan.hpp"

namespace {

using namespace eaplan;

constexpr double kFourierRelTol = 1e-6;
constexpr double kFourierSeconds = 1.0;
constexpr double kPairNormTol = 1e-9;
constexpr double kDischargeRelTol = 0.02;
constexpr double kOffsetTol = 1e-6;
constexpr double kCoverageMin = 0.99;
constexpr double kNoiselessRms = 1e-3;
constexpr double kNoisyRms = 0.05;
constexpr double kEstimatorSeconds = 5.0;
constexpr double kMpcSlack = 1e-6;
constexpr double kMpcSeconds = 10.0;

const std::string kFixtures = EAPLAN_FIXTURE_DIR;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double series(const FourierCoefficients& f, double T, double t) {
  double y = f.a[0] / T;
  for (std::size_t j = 1; j < f.a.size(); ++j) {
    const double arg = 2.0 * kPi * static_cast<double>(j) * t / T;
    y += 2.0 / T * (f.a[j] * std::cos(arg) + f.b[j - 1] * std::sin(arg));
  }
  return y;
}

FourierCoefficients random_coefficients(std::mt19937_64& rng, int order) {
  std::uniform_real_distribution<double> a0(500.0, 3000.0);
  std::uniform_real_distribution<double> ab(-100.0, 100.0);
  FourierCoefficients f{{a0(rng)}, {}};
  for (int j = 0; j < order; ++j) {
    f.a.push_back(ab(rng));
    f.b.push_back(ab(rng));
  }
  return f;
}

Outcome fourier_equivalence() {
  Stopwatch clock;
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int set = 0; set < 20; ++set) {
    const double T = 20.0 + 5.0 * set;
    const EnergyModel model = build_model(3, T, 1, 1);
    const FourierCoefficients f = random_coefficients(rng, 3);
    EnergyState q = initial_state(model, f);
    const Eigen::VectorXd u = Eigen::VectorXd::Zero(model.n());
    const double h = T / 1000.0;
    for (int k = 0; k < 1000; ++k) {
      const double truth = series(f, T, k * h);
      worst = std::max(worst, std::abs(output(model, q) - truth) / std::abs(truth));
      q = step(model, q, u, h);
    }
  }
  const double elapsed = clock.seconds();
  return {worst < kFourierRelTol && elapsed < kFourierSeconds,
          "max rel error " + num(worst) + ", " + num(elapsed) + " s"};
}

Outcome harmonic_conservation() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> input(0.0, 25.0);
  const EnergyModel model = build_model(3, 60.0, 1, 1);
  EnergyState q = initial_state(model, random_coefficients(rng, 3));
  std::vector<double> norms;
  for (int j = 1; j <= 3; ++j) norms.push_back(std::hypot(q(2 * j - 1), q(2 * j)));
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    Eigen::VectorXd u(2);
    u << input(rng), input(rng);
    q = step(model, q, u, 0.01);
    for (int j = 1; j <= 3; ++j)
      worst = std::max(worst, std::abs(std::hypot(q(2 * j - 1), q(2 * j)) - norms[j - 1]) / norms[j - 1]);
  }
  return {worst < kPairNormTol, "max rel drift " + num(worst)};
}

Outcome battery() {
  BatteryParams p{14.8, 14.8, 0.05, 5.0, 5.4, {}};
  Outcome out;
  if (internal_current(p, 0.0) != 0.0) out = {false, "I(0) != 0; "};

  int mismatches = 0;
  const double boundary = p.v * p.v / (4.0 * p.r_r);
  std::vector<double> loads{0.0, 1.0, boundary / 2, std::nextafter(boundary, 0.0), boundary,
                            std::nextafter(boundary, 1e9), boundary * 1.01, boundary * 10};
  for (double y : loads) {
    bool raised = false;
    try {
      internal_current(p, y);
    } catch (const Error& e) {
      raised = e.code() == Errc::InfeasibleLoad;
    }
    if (raised != (p.v * p.v < 4.0 * p.r_r * y)) ++mismatches;
  }
  if (mismatches) out = {false, out.detail + std::to_string(mismatches) + " InfeasibleLoad mismatches; "};

  const double y = 200.0;
  const double rate = p.k_b * (p.v - std::sqrt(p.v * p.v - 4.0 * p.r_r * y)) / (2.0 * p.r_r) / (p.q_c * 3600.0);
  BatteryState s{0.7};
  double t = 0.0;
  double worst = 0.0;
  while (s.soc > 0.0) {
    s = step_soc(p, s, y, 0.01);
    t += 0.01;
    const double closed = 0.7 - rate * t;
    if (closed > 0.01) worst = std::max(worst, std::abs(s.soc - closed) / closed);
  }
  worst = std::max(worst, std::abs(t - 0.7 / rate) / (0.7 / rate));
  if (worst >= kDischargeRelTol) out.pass = false;
  out.detail += "discharge rel error " + num(worst);
  return out;
}

Outcome compute_predictor() {
  const ComputeProfile profile = load_profile(kFixtures + "/profiles/detector_fps.csv");
  int inexact = 0;
  for (const auto& k : profile.knots) {
    const double a = predict(profile, k.param);
    if (std::memcmp(&a, &k.power_w, sizeof a) != 0) ++inexact;
  }
  double worst = 0.0;
  for (std::size_t i = 1; i < profile.knots.size(); ++i) {
    const double lo = profile.knots[i - 1].param;
    const double hi = profile.knots[i].param;
    const double dx = (hi - lo) / 99.0;
    std::vector<double> y;
    for (int k = 0; k < 100; ++k) y.push_back(predict(profile, std::min(lo + k * dx, hi)));
    for (std::size_t k = 1; k + 1 < y.size(); ++k) worst = std::max(worst, std::abs(y[k + 1] - 2 * y[k] + y[k - 1]));
  }
  return {inexact == 0 && worst < 1e-12,
          std::to_string(inexact) + " inexact knots, max second difference " + num(worst)};
}

Outcome coverage() {
  const ParamBounds bounds{{{-1000.0, 0.0}}, {{2.0, 10.0}}};
  const double r = 50.0;
  const double r_min = 30.0;
  const Point2 shift{50.0, 0.0};
  Outcome out;
  double worst_cover = 1.0;
  for (const char* name : {"square", "wide", "tall", "lean_right", "lean_left"}) {
    const Polygon poly = load_polygon_csv(kFixtures + "/polygons/" + name + ".csv");
    const Plan plan = generate_plan(poly, r, r_min, shift, default_start(poly, shift), 100.0, bounds, {});
    try {
      primitive_offsets(plan, bounds.path[0].hi, kOffsetTol);
    } catch (const Error& e) {
      out.pass = false;
      out.detail += std::string(name) + ": " + e.what() + "; ";
    }
    const double cover = coverage_fraction(plan, shift.x, 1.0);
    worst_cover = std::min(worst_cover, cover);
    if (cover < kCoverageMin) out.pass = false;
    for (const auto& s : plan.stages) {
      if (s.path.kind == PathKind::Circle && s.path.radius < r_min) {
        out.pass = false;
        out.detail += std::string(name) + ": circle below r_min; ";
      }
    }
  }
  out.detail += "5 polygons, min coverage " + num(100.0 * worst_cover) + "%";
  return out;
}

// RMS output error over the third period and half the peak-to-peak swing.
std::pair<double, double> estimator_run(double noise_sigma) {
  const FourierCoefficients truth{{1800.0, 60.0, 30.0, 15.0}, {45.0, -20.0, 10.0}};
  const double T = 60.0;
  const double h = 0.01;
  const EnergyModel model = build_model(3, T, 1, 1);
  const EnergyState q_true = initial_state(model, truth);
  EstimatorConfig cfg = default_estimator_config(model, truth.a[0] / T);
  if (noise_sigma > 0.0) cfg.measurement_noise = noise_sigma * noise_sigma;
  Estimate est = make_estimate(model, 2.0 * q_true, cfg);
  std::mt19937_64 rng(99);
  std::normal_distribution<double> noise(0.0, std::max(noise_sigma, 1e-300));
  const Eigen::VectorXd u = Eigen::VectorXd::Zero(2);
  const Propagator prop(model, h);
  EnergyState q = q_true;
  const int per_period = static_cast<int>(std::lround(T / h));
  double sq = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int k = 0; k < 3 * per_period; ++k) {
    const double y = output(model, q);
    est = update(model, est, noise_sigma > 0.0 ? y + noise(rng) : y, cfg);
    if (k >= 2 * per_period) {
      sq += (est.y_hat - y) * (est.y_hat - y);
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
    est = predict(model, est, u, h, cfg);
    prop(q);
  }
  return {std::sqrt(sq / per_period), (hi - lo) / 2.0};
}

Outcome estimator() {
  Stopwatch clock;
  const auto [rms0, amp0] = estimator_run(0.0);
  const auto [rms1, amp1] = estimator_run(0.01 * 30.0);
  const double elapsed = clock.seconds();
  const double rel0 = rms0 / amp0;
  const double rel1 = rms1 / amp1;
  return {rel0 < kNoiselessRms && rel1 < kNoisyRms && elapsed < kEstimatorSeconds,
          "noiseless " + num(rel0) + ", 1% noise " + num(rel1) + " of amplitude, " + num(elapsed) + " s"};
}

Outcome mpc_oracle() {
  Stopwatch clock;
  const ParamBounds bounds{{{-1000.0, 0.0}}, {{2.0, 10.0}}};
  const ComputeProfile profile = load_profile(kFixtures + "/profiles/detector_fps.csv");
  const ScalingFactors scaling = concat(scale_path(bounds.path, 300.0, 360.0),
                                        scale_compute(bounds.compute, [&](double c) { return predict(profile, c); }));
  const EnergyModel model = build_model(3, 60.0, 1, 1);
  const Estimate est = make_estimate(model, initial_state(model, {{1800, 60, 30, 15}, {45, -20, 10}}),
                                     default_estimator_config(model, 30.0));
  const BatteryParams battery{14.8, 14.8, 0.05, 5.0, 5.4, {}};
  MpcConfig cfg;
  cfg.horizon = 0.03;
  const int K = 3;
  const ParamVector c_prev{{-500.0}, {6.0}};

  auto y = [&](int k, double c) {
    EnergyState q = transition(model, cfg.fine_step * k) * est.q_hat;
    q(0) += model.period * scaling.nu[1] * (c - c_prev.compute[0]);
    return output(model, q);
  };
  auto cost = [&](const std::vector<double>& c) {
    const double p = bounds.path[0].normalize(c_prev.path[0]);
    double j = 0.0;
    for (double ck : c) j += cfg.fine_step * (p * p + std::pow(bounds.compute[0].normalize(ck), 2));
    return j;
  };
  auto feasible = [&](const std::vector<double>& c, double cap, double tol) {
    for (int k = 0; k <= K; ++k) {
      const double v = y(k, c[static_cast<std::size_t>(std::min(k, K - 1))]);
      if (v < -tol || v > cap + tol) return false;
    }
    return true;
  };

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> offset(-4.0, 4.0);
  int failures = 0;
  int solved = 0;
  double worst_gap = -std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 50; ++trial) {
    const double cap = est.y_hat + offset(rng);
    std::optional<double> best;
    for (int a = 2; a <= 10; ++a)
      for (int b = 2; b <= 10; ++b)
        for (int c = 2; c <= 10; ++c) {
          const std::vector<double> grid{double(a), double(b), double(c)};
          if (feasible(grid, cap, 0.0) && (!best || cost(grid) > *best)) best = cost(grid);
        }
    try {
      const MpcResult r = solve_schedule_mpc(model, est, battery, {cap / (battery.q_c * battery.v)}, bounds, cfg,
                                             c_prev, scaling);
      std::vector<double> c;
      for (const auto& ck : r.compute_traj) c.push_back(ck[0]);
      ++solved;
      if (!feasible(c, cap, cfg.solver_tolerance)) ++failures;
      if (best) {
        worst_gap = std::max(worst_gap, *best - cost(c));
        if (cost(c) < *best - kMpcSlack) ++failures;
      }
    } catch (const Error& e) {
      if (e.code() != Errc::Infeasible || best) ++failures;
    }
  }
  const double elapsed = clock.seconds();
  return {failures == 0 && elapsed < kMpcSeconds,
          std::to_string(solved) + "/50 solved, " + std::to_string(failures) + " failures, worst grid gap " +
              num(worst_gap) + ", " + num(elapsed) + " s"};
}

std::string telemetry_csv(const Telemetry& tel) {
  std::ostringstream out;
  write_telemetry_csv(out, tel);
  return out.str();
}

struct ScenarioRuns {
  Scenario i, ii;
  SimulationResult i_static, i_adaptive, ii_static, ii_adaptive;
};

ScenarioRuns& scenario_runs() {
  static ScenarioRuns runs = [] {
    ScenarioRuns r;
    r.i = load_scenario(kFixtures + "/scenarios/scenario_i.scn");
    r.ii = load_scenario(kFixtures + "/scenarios/scenario_ii.scn");
    r.i_static = run_scenario(r.i, false);
    r.i_adaptive = run_scenario(r.i, true);
    r.ii_static = run_scenario(r.ii, false);
    r.ii_adaptive = run_scenario(r.ii, true);
    return r;
  }();
  return runs;
}

Outcome scenario_reproduction() {
  ScenarioRuns& r = scenario_runs();
  Outcome out;
  const Telemetry& is = r.i_static.telemetry;
  const Telemetry& ia = r.i_adaptive.telemetry;
  const bool static_fails = is.termination == Termination::BatteryExhausted && is.final_stage_count < r.i_static.stages.size();
  double metric_i = 0.0;
  if (ia.termination == Termination::Completed && ia.final_soc > 0.0) metric_i = performance_metric(ia, r.i);
  const bool adaptive_ok = ia.termination == Termination::Completed && ia.final_soc > 0.0 && metric_i > 0.0;

  const Telemetry& ls = r.ii_static.telemetry;
  const Telemetry& la = r.ii_adaptive.telemetry;
  const double metric_static = ls.final_soc > 0.0 ? performance_metric(ls, r.ii) : -1.0;
  const double metric_adaptive = la.final_soc > 0.0 ? performance_metric(la, r.ii) : -1.0;
  const auto [ps, cs] = mean_normalized_params(ls, r.ii.bounds);
  const auto [pa, ca] = mean_normalized_params(la, r.ii.bounds);
  const bool ii_ok = pa > ps && ca > cs && metric_adaptive > 0.0 && metric_static == 0.0;

  out.pass = static_fails && adaptive_ok && ii_ok;
  out.detail = "i: static " + std::string(to_string(is.termination)) + ", adaptive " + to_string(ia.termination) +
               " soc " + num(ia.final_soc) + " metric " + num(metric_i) + "; ii: metric " + num(metric_static) +
               " -> " + num(metric_adaptive);
  return out;
}

Outcome determinism() {
  ScenarioRuns& r = scenario_runs();
  const bool same_i = telemetry_csv(run_scenario(r.i, true).telemetry) == telemetry_csv(r.i_adaptive.telemetry);
  const bool same_ii = telemetry_csv(run_scenario(r.ii, false).telemetry) == telemetry_csv(r.ii_static.telemetry);
  return {same_i && same_ii, std::string("scenario_i adaptive ") + (same_i ? "identical" : "differs") +
                                 ", scenario_ii static " + (same_ii ? "identical" : "differs")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"fourier equivalence", fourier_equivalence},
      {"harmonic conservation", harmonic_conservation},
      {"battery", battery},
      {"compute predictor", compute_predictor},
      {"coverage", coverage},
      {"estimator convergence", estimator},
      {"mpc oracle", mpc_oracle},
      {"scenario reproduction", scenario_reproduction},
      {"determinism", determinism},
  };
  Stopwatch clock;
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed in %.1f s\n", static_cast<int>(criteria.size()) - failed, criteria.size(),
              clock.seconds());
  return failed == 0 ? 0 : 1;
}
