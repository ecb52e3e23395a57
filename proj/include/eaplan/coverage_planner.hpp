#pragma once

// Zamboni-like coverage plans: a finite-state machine of line and circle
// stages sweeping a convex polygon, with the radius of the second circle of
// each primitive block driven by a path parameter.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "eaplan/csv.hpp"
#include "eaplan/error.hpp"
#include "eaplan/geometry.hpp"

namespace eaplan {

enum class PathKind { Line, Circle };
enum class Orientation { CW, CCW };

/// A line (point and unit travel direction) or a circle (center, radius,
/// traversal orientation).
struct PathFunction {
  PathKind kind = PathKind::Line;
  Point2 point;      // line: a point on the line; circle: the center
  Point2 direction;  // line only, unit norm
  double radius = 0.0;
  Orientation orientation = Orientation::CCW;

  static PathFunction line(Point2 through, Point2 dir) {
    return {PathKind::Line, through, normalized(dir), 0.0, Orientation::CCW};
  }
  static PathFunction circle(Point2 center, double radius, Orientation o) {
    return {PathKind::Circle, center, {}, radius, o};
  }

  /// Implicit form: signed distance to the left of a line, or
  /// (x-cx)^2 + (y-cy)^2 - R^2 for a circle. Zero on the path.
  double evaluate(Point2 p) const {
    if (kind == PathKind::Line) return dot(perp(direction), p - point);
    const Point2 d = p - point;
    return dot(d, d) - radius * radius;
  }
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const { return v >= lo && v <= hi; }
  double width() const { return hi - lo; }
  double clamp(double v) const { return std::min(std::max(v, lo), hi); }
  double normalize(double v) const { return (v - lo) / (hi - lo); }
};

struct ParamBounds {
  std::vector<Interval> path;     // real-valued path parameters
  std::vector<Interval> compute;  // integer-valued computation parameters
};

/// Path parameters followed by computation parameters (the latter are
/// integers stored as reals).
struct ParamVector {
  std::vector<double> path;
  std::vector<double> compute;

  std::size_t size() const { return path.size() + compute.size(); }
  double operator[](std::size_t i) const { return i < path.size() ? path[i] : compute[i - path.size()]; }
  double& operator[](std::size_t i) { return i < path.size() ? path[i] : compute[i - path.size()]; }
  friend bool operator==(const ParamVector&, const ParamVector&) = default;
};

inline bool within_bounds(const ParamVector& c, const ParamBounds& b) {
  if (c.path.size() != b.path.size() || c.compute.size() != b.compute.size()) return false;
  for (std::size_t i = 0; i < c.path.size(); ++i)
    if (!b.path[i].contains(c.path[i])) return false;
  for (std::size_t i = 0; i < c.compute.size(); ++i)
    if (!b.compute[i].contains(c.compute[i])) return false;
  return true;
}

/// Position of a stage inside its primitive block.
enum class StageRole { DownLine = 0, FirstCircle = 1, UpLine = 2, SecondCircle = 3 };

struct Stage {
  PathFunction path;
  Point2 entry;    // where the stage is entered (previous trigger or start)
  Point2 trigger;  // p_Gamma_i
  double trigger_radius = 0.0;
  std::vector<Interval> path_bounds;
  std::vector<Interval> compute_bounds;
  StageRole role = StageRole::DownLine;
  double path_parameter = 0.0;  // c1 the stage was generated with
};

/// Inputs that fully determine a plan; kept on the plan so the not yet flown
/// part can be re-derived after a path-parameter change.
struct PlanGeometry {
  Polygon polygon;
  double radius = 0.0;      // ideal turning radius r
  double min_radius = 0.0;  // minimum turning radius
  Point2 shift;             // d; only the x component drives the sweep
  Point2 start;
  double altitude = 0.0;
  double epsilon = 0.0;
  ParamBounds bounds;
};

struct Plan {
  PlanGeometry geometry;
  std::vector<Stage> stages;
  std::size_t n_primitive = 4;
  Point2 final_point;
  std::size_t current_index = 0;
  double path_parameter = 0.0;  // current c1

  std::size_t size() const { return stages.size(); }
  bool complete() const { return current_index >= stages.size(); }
  const Stage& current() const { return stages.at(current_index); }
};

/// Radius of the second circle as a function of the path parameter.
inline double r2_radius(double c1, double r, double r_min) {
  if (!(r > r_min) || !(r_min > 0.0))
    throw Error(Errc::InvalidArgument, "need r > r_min > 0");
  const double lower = r_min * r_min - r * r;
  if (!(c1 > lower) || c1 > 0.0)
    throw Error(Errc::OutOfRange, "path parameter " + csv::fmt(c1) + " outside (" + csv::fmt(lower) + ", 0]");
  return std::sqrt(r * r + c1);
}

/// Circle of radius r2(c1) whose rightmost point lies on p3.
inline PathFunction second_circle(Point2 p3, double c1, double r, double r_min) {
  const double r2 = r2_radius(c1, r, r_min);
  return PathFunction::circle({p3.x - r2, p3.y}, r2, Orientation::CCW);
}

/// r1 = r + x_d / 2 keeps consecutive primitive blocks shifted by d.
inline double first_circle_radius(double r, Point2 shift) { return r + shift.x / 2.0; }

/// Horizontal displacement between consecutive primitive blocks.
inline double block_shift(double r, double r_min, Point2 shift, double c1) {
  return 2.0 * first_circle_radius(r, shift) - 2.0 * r2_radius(c1, r, r_min);
}

/// Start on the top edge, half a swath in from v1. Falls back to the line
/// through the vertex centroid when the polygon is narrower than that.
inline Point2 default_start(const Polygon& polygon, Point2 shift) {
  const Point2 dir = polygon.sweep_edge_direction();
  const Point2 candidate = polygon[0] + Point2{shift.x / 2.0, 0.0};
  if (polygon.clip_line(candidate, dir)) return candidate;
  Point2 centroid;
  for (auto v : polygon.vertices()) centroid = centroid + v;
  centroid = centroid * (1.0 / static_cast<double>(polygon.size()));
  const auto chord = polygon.clip_line(centroid, dir);
  if (!chord) return centroid;
  // topmost end of the chord through the centroid
  const Point2 a = centroid + chord->first * dir;
  const Point2 b = centroid + chord->second * dir;
  return a.y >= b.y ? a : b;
}

namespace detail {

inline Orientation turn_orientation(Point2 incoming_heading, Point2 entry, Point2 center) {
  return cross(incoming_heading, center - entry) > 0.0 ? Orientation::CCW : Orientation::CW;
}

/// Line stage through `entry` travelling along `dir`. The trigger is the
/// chord end farthest from the entry point. Lines that miss the polygon end
/// at the polygon's top or bottom level when `allow_outside` is set.
inline std::optional<Stage> make_line(const PlanGeometry& g, Point2 entry, Point2 dir, StageRole role,
                                      double c1, bool allow_outside) {
  Stage s;
  s.path = PathFunction::line(entry, dir);
  s.entry = entry;
  s.role = role;
  s.path_parameter = c1;
  s.trigger_radius = g.epsilon;
  s.path_bounds = g.bounds.path;
  s.compute_bounds = g.bounds.compute;
  if (const auto chord = g.polygon.clip_line(entry, dir)) {
    const Point2 a = entry + chord->first * dir;
    const Point2 b = entry + chord->second * dir;
    const double da = distance(a, entry);
    const double db = distance(b, entry);
    if (std::abs(da - db) <= 1e-9)
      s.trigger = chord->second >= chord->first ? b : a;
    else
      s.trigger = da > db ? a : b;
    return s;
  }
  if (!allow_outside) return std::nullopt;
  const double level = dir.y < 0.0 ? g.polygon.min_y() : g.polygon.max_y();
  s.trigger = entry + ((level - entry.y) / dir.y) * dir;
  return s;
}

/// Half-turn circle entered at `entry`; the trigger is the antipodal point.
inline Stage make_circle(const PlanGeometry& g, Point2 entry, Point2 incoming_heading, StageRole role, double c1) {
  Stage s;
  s.entry = entry;
  s.role = role;
  s.path_parameter = c1;
  s.trigger_radius = g.epsilon;
  s.path_bounds = g.bounds.path;
  s.compute_bounds = g.bounds.compute;
  if (role == StageRole::FirstCircle) {
    const double r1 = first_circle_radius(g.radius, g.shift);
    const Point2 center{entry.x + r1, entry.y};
    s.path = PathFunction::circle(center, r1, turn_orientation(incoming_heading, entry, center));
    s.trigger = {entry.x + 2.0 * r1, entry.y};
  } else {
    s.path = second_circle(entry, c1, g.radius, g.min_radius);
    s.path.orientation = turn_orientation(incoming_heading, entry, s.path.point);
    s.trigger = {entry.x - 2.0 * s.path.radius, entry.y};
  }
  return s;
}

inline Point2 heading_of(const Stage& s) {
  if (s.path.kind == PathKind::Line) return s.path.direction;
  // tangent at the trigger of a half-turn
  const Point2 radial = s.trigger - s.path.point;
  const Point2 left = perp(normalized(radial));
  return s.path.orientation == Orientation::CCW ? left : left * -1.0;
}

/// Appends stages after `plan.stages` until the next line would fall entirely
/// outside the polygon. The first primitive block is always completed.
inline void extend(Plan& plan) {
  const PlanGeometry& g = plan.geometry;
  const Point2 down = g.polygon.sweep_edge_direction();
  const double c1 = plan.path_parameter;
  const std::size_t n = plan.n_primitive;

  auto line_dir = [&](StageRole role) { return role == StageRole::DownLine ? down : down * -1.0; };

  if (plan.stages.empty()) {
    auto first = make_line(g, g.start, down, StageRole::DownLine, c1, false);
    if (!first) throw Error(Errc::InvalidArgument, "the first sweep line through the start misses the polygon");
    plan.stages.push_back(*first);
  }

  while (true) {
    const Stage& last = plan.stages.back();
    const auto next_role = static_cast<StageRole>((static_cast<int>(last.role) + 1) % 4);
    const bool in_first_block = plan.stages.size() < n;
    if (next_role == StageRole::DownLine || next_role == StageRole::UpLine) {
      auto line = make_line(g, last.trigger, line_dir(next_role), next_role, c1, in_first_block);
      if (!line) break;
      plan.stages.push_back(*line);
      continue;
    }
    Stage circle = make_circle(g, last.trigger, heading_of(last), next_role, c1);
    if (!in_first_block) {
      const auto after_role = static_cast<StageRole>((static_cast<int>(next_role) + 1) % 4);
      if (!g.polygon.clip_line(circle.trigger, line_dir(after_role))) break;
    }
    plan.stages.push_back(std::move(circle));
    if (!in_first_block || plan.stages.size() < n) continue;
    // first block just completed; the next line decides whether to go on
    const auto after_role = static_cast<StageRole>((static_cast<int>(next_role) + 1) % 4);
    if (!g.polygon.clip_line(plan.stages.back().trigger, line_dir(after_role))) break;
  }
  plan.final_point = plan.stages.back().trigger;
}

}  // namespace detail

struct PlanOptions {
  /// Trigger radius for every stage; NaN selects 1% of |shift.x|.
  double epsilon = std::numeric_limits<double>::quiet_NaN();
  double path_parameter = 0.0;
};

/// Builds the Zamboni-like coverage plan of a convex polygon.
inline Plan generate_plan(const Polygon& polygon, double r, double r_min, Point2 shift, Point2 start, double altitude,
                          const ParamBounds& bounds, const PlanOptions& options = {}) {
  if (!(altitude > 0.0)) throw Error(Errc::InvalidArgument, "altitude must be positive");
  if (!(shift.x > 0.0)) throw Error(Errc::UnreachableFinalPoint, "shift must progress toward the far edge (x_d > 0)");
  if (shift.y != 0.0) throw Error(Errc::UnreachableFinalPoint, "only a horizontal shift is supported");
  for (const auto& b : bounds.path)
    if (b.lo > b.hi) throw Error(Errc::DegenerateBounds, "path bound lower > upper");
  for (const auto& b : bounds.compute)
    if (b.lo > b.hi) throw Error(Errc::DegenerateBounds, "compute bound lower > upper");
  r2_radius(options.path_parameter, r, r_min);  // validates radii and c1

  Plan plan{PlanGeometry{polygon, r, r_min, shift, start, altitude,
                         std::isnan(options.epsilon) ? 0.01 * std::abs(shift.x) : options.epsilon, bounds},
            {}, 4, {}, 0, options.path_parameter};
  if (plan.geometry.epsilon < 0.0) throw Error(Errc::InvalidArgument, "trigger radius must be >= 0");
  detail::extend(plan);
  return plan;
}

/// Finite-state-machine transition: the next stage index when p is strictly
/// within the current trigger radius, otherwise the current one. Returns
/// plan.size() once the final point has been reached.
inline std::size_t stage_transition(const Plan& plan, Point2 p) {
  const std::size_t i = plan.current_index;
  if (i >= plan.stages.size()) return plan.stages.size();
  const Stage& s = plan.stages[i];
  return distance(p, s.trigger) < s.trigger_radius ? i + 1 : i;
}

/// Applies a new path parameter to every second circle not yet entered and
/// re-derives the remaining stages. Already flown or active stages stay.
inline void set_path_parameter(Plan& plan, double c1) {
  const auto& g = plan.geometry;
  r2_radius(c1, g.radius, g.min_radius);
  if (c1 == plan.path_parameter) return;
  plan.path_parameter = c1;
  std::size_t pending = plan.current_index + 1;
  while (pending < plan.stages.size() && plan.stages[pending].role != StageRole::SecondCircle) ++pending;
  if (pending >= plan.stages.size()) return;
  plan.stages.resize(pending);
  detail::extend(plan);
}

/// Constant offsets e_j between consecutive repetitions of the primitive
/// stages, evaluated at the plan's start. Throws NotPrimitive when any
/// repetition disagrees beyond `tol` or was built with another parameter.
inline std::vector<double> primitive_offsets(const Plan& plan, double c1_ref, double tol = 1e-6) {
  const std::size_t n = plan.n_primitive;
  const auto& g = plan.geometry;
  std::vector<double> offsets(n, 0.0);
  for (const auto& s : plan.stages) {
    if (s.path_parameter != c1_ref) throw Error(Errc::NotPrimitive, "stage built with a different path parameter");
  }
  if (plan.stages.size() <= n) return offsets;

  const Point2 d{block_shift(g.radius, g.min_radius, g.shift, c1_ref), 0.0};
  const Point2 p = plan.stages.front().entry;
  std::vector<bool> seen(n, false);
  for (std::size_t k = n; k < plan.stages.size(); ++k) {
    const std::size_t i = k / n;
    const std::size_t j = k % n;
    const auto& prev = plan.stages[k - n].path;
    const auto& next = plan.stages[k].path;
    if (prev.kind != next.kind || (prev.kind == PathKind::Line && distance(prev.direction, next.direction) > tol))
      throw Error(Errc::NotPrimitive, "stage " + std::to_string(k) + " changes path kind or direction");
    if (prev.kind == PathKind::Circle && std::abs(prev.radius - next.radius) > tol)
      throw Error(Errc::NotPrimitive, "stage " + std::to_string(k) + " changes radius");
    const double e = prev.evaluate(p + static_cast<double>(i - 1) * d) - next.evaluate(p + static_cast<double>(i) * d);
    if (!seen[j]) {
      offsets[j] = e;
      seen[j] = true;
    } else if (std::abs(e - offsets[j]) > tol) {
      throw Error(Errc::NotPrimitive, "offset of stage " + std::to_string(k) + " differs by " +
                                          csv::fmt(std::abs(e - offsets[j])));
    }
  }
  return offsets;
}

/// Nominal length of a stage: the chord for lines, a half turn for circles.
inline double stage_length(const Stage& s) {
  if (s.path.kind == PathKind::Line) return distance(s.entry, s.trigger);
  return kPi * s.path.radius;
}

/// Nominal length still to fly from p on the current stage to the final point.
inline double remaining_length(const Plan& plan, Point2 p) {
  if (plan.complete()) return 0.0;
  const Stage& s = plan.current();
  double ahead = 0.0;
  if (s.path.kind == PathKind::Line) {
    ahead = dot(s.trigger - p, s.path.direction);
  } else {
    const Point2 from = p - s.path.point;
    const Point2 to = s.trigger - s.path.point;
    double sweep = std::atan2(cross(from, to), dot(from, to));
    if (s.path.orientation == Orientation::CW) sweep = -sweep;
    if (sweep < 0.0) sweep += 2.0 * kPi;
    ahead = std::min(sweep, kPi) * s.path.radius;
  }
  double total = std::clamp(ahead, 0.0, stage_length(s));
  for (std::size_t i = plan.current_index + 1; i < plan.stages.size(); ++i) total += stage_length(plan.stages[i]);
  return total;
}

/// Share of the whole coverage at path parameter c1 that would remain if the
/// plan switched to c1 at p: remaining length over the length of a plan
/// flown entirely at c1.
inline double remaining_share(const Plan& plan, Point2 p, double c1) {
  Plan switched = plan;
  set_path_parameter(switched, c1);
  Plan fresh{plan.geometry, {}, plan.n_primitive, {}, 0, c1};
  detail::extend(fresh);
  double full = 0.0;
  for (const auto& s : fresh.stages) full += stage_length(s);
  return full > 0.0 ? std::clamp(remaining_length(switched, p) / full, 0.0, 1.0) : 0.0;
}

/// Fraction of grid samples inside the polygon that lie within swath/2 of a
/// line stage.
inline double coverage_fraction(const Plan& plan, double swath, double resolution = 1.0) {
  const Polygon& poly = plan.geometry.polygon;
  std::vector<std::pair<Point2, Point2>> segments;
  for (const auto& s : plan.stages)
    if (s.path.kind == PathKind::Line) segments.emplace_back(s.entry, s.trigger);
  std::size_t inside = 0;
  std::size_t covered = 0;
  const double half = swath / 2.0;
  for (double y = poly.min_y() + resolution / 2.0; y < poly.max_y(); y += resolution) {
    for (double x = poly.min_x() + resolution / 2.0; x < poly.max_x(); x += resolution) {
      const Point2 p{x, y};
      if (!poly.contains(p)) continue;
      ++inside;
      for (const auto& [a, b] : segments) {
        if (distance_to_segment(p, a, b) <= half) {
          ++covered;
          break;
        }
      }
    }
  }
  return inside == 0 ? 1.0 : static_cast<double>(covered) / static_cast<double>(inside);
}

inline Polygon load_polygon_csv(const std::string& path) {
  const auto rows = csv::parse_numeric(csv::read_file(path));
  std::vector<Point2> pts;
  for (const auto& row : rows) {
    if (row.size() < 2) throw Error(Errc::ParseError, "polygon rows need x,y");
    pts.push_back({row[0], row[1]});
  }
  return Polygon::from_points(std::move(pts));
}

/// One row per stage. Lines fill x,y (a point) and dir_x,dir_y; circles fill
/// x,y (the center), radius and orientation.
inline void write_plan_csv(std::ostream& out, const Plan& plan) {
  out << "index,kind,x,y,dir_x,dir_y,radius,orientation,trigger_x,trigger_y,epsilon\n";
  for (std::size_t i = 0; i < plan.stages.size(); ++i) {
    const auto& s = plan.stages[i];
    const auto& f = s.path;
    out << i << ',' << (f.kind == PathKind::Line ? "line" : "circle") << ',' << csv::fmt(f.point.x) << ','
        << csv::fmt(f.point.y) << ',';
    if (f.kind == PathKind::Line)
      out << csv::fmt(f.direction.x) << ',' << csv::fmt(f.direction.y) << ",,,";
    else
      out << ",," << csv::fmt(f.radius) << ',' << (f.orientation == Orientation::CCW ? "ccw" : "cw") << ',';
    out << csv::fmt(s.trigger.x) << ',' << csv::fmt(s.trigger.y) << ',' << csv::fmt(s.trigger_radius) << '\n';
  }
}

}  // namespace eaplan
