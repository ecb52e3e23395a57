#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "eaplan/error.hpp"

namespace eaplan {

inline constexpr double kPi = 3.14159265358979323846;

/// Planar point in the world frame: x east, y north, meters.
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
  friend constexpr Point2 operator*(Point2 p, double s) { return {s * p.x, s * p.y}; }
  friend constexpr bool operator==(Point2, Point2) = default;
};

constexpr double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 p) { return std::hypot(p.x, p.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }
inline Point2 normalized(Point2 p) {
  const double n = norm(p);
  return {p.x / n, p.y / n};
}
/// Left-hand normal.
constexpr Point2 perp(Point2 p) { return {-p.y, p.x}; }

inline double distance_to_segment(Point2 p, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  const double s = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + s * ab);
}

inline double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a - kPi;
}

/// Convex polygon with vertices ordered clockwise from the top-left-most
/// vertex (largest y, then smallest x). Construction normalizes the ordering
/// and rejects anything that is not a simple convex polygon.
class Polygon {
 public:
  static Polygon from_points(std::vector<Point2> pts) {
    if (pts.size() >= 2 && pts.front() == pts.back()) pts.pop_back();
    if (pts.size() < 3) throw Error(Errc::DegeneratePolygon, "polygon needs at least 3 vertices");
    for (const auto& p : pts) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y))
        throw Error(Errc::DegeneratePolygon, "non-finite vertex");
    }
    double area2 = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) area2 += cross(pts[i], pts[(i + 1) % pts.size()]);
    if (std::abs(area2) < 1e-12) throw Error(Errc::DegeneratePolygon, "zero-area polygon");
    if (area2 > 0.0) std::reverse(pts.begin(), pts.end());  // make clockwise

    const std::size_t count = pts.size();
    for (std::size_t i = 0; i < count; ++i) {
      const Point2 a = pts[i];
      const Point2 b = pts[(i + 1) % count];
      const Point2 c = pts[(i + 2) % count];
      const double turn = cross(b - a, c - b);
      if (turn > 1e-9 * std::max(1.0, norm(b - a) * norm(c - b)))
        throw Error(Errc::DegeneratePolygon, "polygon is not convex");
      if (distance(a, b) == 0.0) throw Error(Errc::DegeneratePolygon, "repeated vertex");
    }

    auto top_left = std::min_element(pts.begin(), pts.end(), [](Point2 a, Point2 b) {
      if (a.y != b.y) return a.y > b.y;
      return a.x < b.x;
    });
    std::rotate(pts.begin(), top_left, pts.end());
    return Polygon(std::move(pts));
  }

  std::span<const Point2> vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  Point2 operator[](std::size_t i) const { return vertices_[i]; }

  /// Edge from v1 to the last vertex; sweep lines run parallel to it.
  Point2 sweep_edge_direction() const { return normalized(vertices_.back() - vertices_.front()); }

  double min_x() const { return extreme([](Point2 p) { return p.x; }, false); }
  double max_x() const { return extreme([](Point2 p) { return p.x; }, true); }
  double min_y() const { return extreme([](Point2 p) { return p.y; }, false); }
  double max_y() const { return extreme([](Point2 p) { return p.y; }, true); }

  bool contains(Point2 p, double tol = 0.0) const {
    const std::size_t count = vertices_.size();
    for (std::size_t i = 0; i < count; ++i) {
      const Point2 a = vertices_[i];
      const Point2 b = vertices_[(i + 1) % count];
      // clockwise: interior is to the right of every edge
      if (cross(b - a, p - a) > tol * norm(b - a)) return false;
    }
    return true;
  }

  double area() const {
    double area2 = 0.0;
    for (std::size_t i = 0; i < vertices_.size(); ++i)
      area2 += cross(vertices_[i], vertices_[(i + 1) % vertices_.size()]);
    return std::abs(area2) / 2.0;
  }

  /// Parameter interval [s_in, s_out] of the infinite line origin + s*dir
  /// inside the polygon, or nullopt if the line misses it or touches a single
  /// point.
  std::optional<std::pair<double, double>> clip_line(Point2 origin, Point2 dir) const {
    double s_in = -std::numeric_limits<double>::infinity();
    double s_out = std::numeric_limits<double>::infinity();
    const std::size_t count = vertices_.size();
    for (std::size_t i = 0; i < count; ++i) {
      const Point2 a = vertices_[i];
      const Point2 b = vertices_[(i + 1) % count];
      const Point2 inward = perp(b - a) * -1.0;  // right-hand normal for clockwise order
      const double num = dot(inward, origin - a);
      const double den = dot(inward, dir);
      if (std::abs(den) < 1e-15) {
        if (num < 0.0) return std::nullopt;
        continue;
      }
      const double s = -num / den;
      if (den > 0.0)
        s_in = std::max(s_in, s);
      else
        s_out = std::min(s_out, s);
    }
    if (!(s_out - s_in > 1e-9)) return std::nullopt;
    return std::make_pair(s_in, s_out);
  }

 private:
  explicit Polygon(std::vector<Point2> v) : vertices_(std::move(v)) {}

  template <typename F>
  double extreme(F key, bool take_max) const {
    double best = key(vertices_.front());
    for (const auto& p : vertices_) best = take_max ? std::max(best, key(p)) : std::min(best, key(p));
    return best;
  }

  std::vector<Point2> vertices_;
};

}  // namespace eaplan
