#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "eaplan/eaplan.hpp"

namespace {

using namespace eaplan;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::InvalidArgument, "cannot write " + path);
  return out;
}

Scenario load_with_profile(const std::string& scenario_path, const std::string& profile_override) {
  Scenario s = load_scenario(scenario_path);
  if (!profile_override.empty()) {
    s.profile = load_profile(profile_override);
    s.profile_path = profile_override;
    validate(s);
  }
  return s;
}

void report(const Scenario& s, const SimulationResult& r) {
  const Telemetry& tel = r.telemetry;
  std::cerr << "termination: " << to_string(tel.termination) << "\n"
            << "time: " << (tel.rows.empty() ? 0.0 : tel.rows.back().t) << " s\n"
            << "final soc: " << tel.final_soc << "\n"
            << "coverage time bounds: " << r.t_lower << " .. " << r.t_upper << " s\n";
  if (tel.final_soc > 0.0) std::cerr << "metric: " << performance_metric(tel, s) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-aware coverage planning and scheduling for fixed-wing robots"};
  app.require_subcommand(1);

  std::string polygon_path;
  std::string out_path;
  double shift = 0.0;
  double radius = 0.0;
  double min_radius = 0.0;
  double c1 = 0.0;
  double altitude = 100.0;
  auto* plan_cmd = app.add_subcommand("plan", "Generate a coverage plan for a convex polygon");
  plan_cmd->add_option("--polygon", polygon_path, "Polygon CSV with x,y columns")->required();
  plan_cmd->add_option("--shift", shift, "Line spacing x_d in meters")->required();
  plan_cmd->add_option("--radius", radius, "Ideal turning radius r")->required();
  plan_cmd->add_option("--min-radius", min_radius, "Minimum turning radius")->required();
  plan_cmd->add_option("--c1", c1, "Path parameter c1 in (r_min^2 - r^2, 0]");
  plan_cmd->add_option("--altitude", altitude, "Flight altitude in meters");
  plan_cmd->add_option("--out", out_path, "Output plan CSV")->required();

  std::string scenario_path;
  std::string profile_path;
  std::string svg_path;
  bool adaptive = false;
  auto* replan_cmd = app.add_subcommand("replan", "Run the re-planning loop and write its decisions");
  replan_cmd->add_option("--scenario", scenario_path, "Scenario file")->required();
  replan_cmd->add_option("--profile", profile_path, "Override the scenario's compute profile CSV");
  replan_cmd->add_option("--out", out_path, "Output decisions CSV")->required();

  auto* sim_cmd = app.add_subcommand("simulate", "Fly a scenario and write telemetry");
  sim_cmd->add_option("--scenario", scenario_path, "Scenario file")->required();
  sim_cmd->add_flag("--adaptive", adaptive, "Enable re-planning and re-scheduling");
  sim_cmd->add_option("--profile", profile_path, "Override the scenario's compute profile CSV");
  sim_cmd->add_option("--out", out_path, "Output telemetry CSV")->required();
  sim_cmd->add_option("--svg", svg_path, "Optional SVG figure");

  int order = 3;
  double period = 0.0;
  auto* model_cmd = app.add_subcommand("model", "Dump the A, B, C matrices of the energy model");
  model_cmd->add_option("--order", order, "Fourier order r");
  model_cmd->add_option("--period", period, "Period T in seconds")->required();
  model_cmd->add_option("--out", out_path, "Output CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*plan_cmd) {
      const Polygon polygon = load_polygon_csv(polygon_path);
      ParamBounds bounds{{{min_radius * min_radius - radius * radius, 0.0}}, {}};
      bounds.path[0].lo = std::nextafter(bounds.path[0].lo, 0.0);
      const Point2 d{shift, 0.0};
      const Plan plan = generate_plan(polygon, radius, min_radius, d, default_start(polygon, d), altitude, bounds,
                                      PlanOptions{std::numeric_limits<double>::quiet_NaN(), c1});
      auto out = open_out(out_path);
      write_plan_csv(out, plan);
      std::cerr << plan.size() << " stages, final point (" << plan.final_point.x << ", " << plan.final_point.y
                << ")\n";
      return 0;
    }
    if (*model_cmd) {
      const EnergyModel model = build_model(order, period, 1, 1);
      auto out = open_out(out_path);
      write_model_csv(out, model);
      return 0;
    }

    Scenario s;
    try {
      s = load_with_profile(scenario_path, profile_path);
    } catch (const Error& e) {
      std::cerr << "scenario invalid: " << e.what() << "\n";
      return 3;
    }
    const bool run_adaptive = *replan_cmd || adaptive;
    SimulationResult result;
    try {
      result = run_scenario(s, run_adaptive);
    } catch (const Error& e) {
      if (e.code() != Errc::ScenarioInvalid) throw;
      std::cerr << "scenario invalid: " << e.what() << "\n";
      return 3;
    }
    auto out = open_out(out_path);
    if (*replan_cmd)
      write_replan_csv(out, result.telemetry);
    else
      write_telemetry_csv(out, result.telemetry);
    if (!svg_path.empty()) {
      auto svg = open_out(svg_path);
      write_svg(svg, s, result.telemetry);
    }
    report(s, result);
    return exit_code(result.telemetry.termination);
  } catch (const Error& e) {
    std::cerr << to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  }
}
