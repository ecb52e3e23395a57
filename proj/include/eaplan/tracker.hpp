#pragma once

#include <algorithm>
#include <cmath>

#include "eaplan/coverage_planner.hpp"
#include "eaplan/error.hpp"
#include "eaplan/geometry.hpp"

namespace eaplan {

struct Wind {
  double speed = 0.0;
  double direction_deg = 0.0;  // direction the air moves toward, CCW from +x

  Point2 vector() const {
    const double a = direction_deg * kPi / 180.0;
    return {speed * std::cos(a), speed * std::sin(a)};
  }
};

struct TrackerGains {
  double lookahead = 6.0;     // carrot distance along the path, m
  double max_turn_rate = 1.0; // rad/s
};

/// Gains scaled to the vehicle: lookahead 0.2 r_min and a turn-rate limit
/// that covers the tightest allowed circle at the downwind ground speed.
inline TrackerGains default_gains(double min_radius, double airspeed, double wind_speed) {
  return {0.2 * min_radius, 2.0 * (airspeed + wind_speed) / min_radius};
}

struct Pose {
  Point2 position;
  double heading = 0.0;  // air-relative heading, rad
};

/// Point at arc length `ahead` beyond the projection of p on the stage path.
inline Point2 carrot_point(const PathFunction& path, Point2 p, double ahead) {
  if (path.kind == PathKind::Line) {
    const double s = dot(p - path.point, path.direction);
    return path.point + (s + ahead) * path.direction;
  }
  const Point2 radial = p - path.point;
  const double angle = std::atan2(radial.y, radial.x);
  const double sign = path.orientation == Orientation::CCW ? 1.0 : -1.0;
  const double target = angle + sign * ahead / path.radius;
  return path.point + path.radius * Point2{std::cos(target), std::sin(target)};
}

/// One unicycle step: the ground course is steered toward the carrot point
/// with a wind-triangle crab, the heading rate is saturated, and the ground
/// velocity is the air velocity plus the wind.
inline Pose follow_path(const Pose& pose, const Stage& stage, double airspeed, const Wind& wind, double h,
                        const TrackerGains& gains) {
  if (!(airspeed > 0.0)) throw Error(Errc::InvalidArgument, "airspeed must be positive");
  const Point2 w = wind.vector();
  const Point2 carrot = carrot_point(stage.path, pose.position, gains.lookahead);
  Point2 course = carrot - pose.position;
  if (norm(course) < 1e-12) course = {std::cos(pose.heading), std::sin(pose.heading)};
  course = normalized(course);
  const double crab = std::asin(std::clamp(cross(course, w) / airspeed, -1.0, 1.0));
  const double desired = std::atan2(course.y, course.x) - crab;
  const double max_delta = gains.max_turn_rate * h;
  const double heading = wrap_angle(pose.heading + std::clamp(wrap_angle(desired - pose.heading), -max_delta, max_delta));
  const Point2 ground = airspeed * Point2{std::cos(heading), std::sin(heading)} + w;
  return {pose.position + h * ground, heading};
}

/// Air heading that makes the ground track follow `dir` under the wind.
inline double heading_for_course(Point2 dir, double airspeed, const Wind& wind) {
  const Point2 d = normalized(dir);
  const double crab = std::asin(std::clamp(cross(d, wind.vector()) / airspeed, -1.0, 1.0));
  return wrap_angle(std::atan2(d.y, d.x) - crab);
}

}  // namespace eaplan
