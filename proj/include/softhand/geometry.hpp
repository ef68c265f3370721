#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace softhand {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point2, Point2) = default;
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

struct Segment {
  Point2 a;
  Point2 b;
};

// Parameter t in [0,1] of the point on `s` closest to `p`.
double closest_parameter(const Segment& s, Point2 p);
Point2 point_at(const Segment& s, double t);

struct Circle {
  Point2 center;
  double radius = 1.0;
};

// Convex polygon, counter-clockwise after normalisation.
struct Polygon {
  std::vector<Point2> vertices;
};

// Signed clearance between a segment and an obstacle: positive gap when
// separated, negative penetration depth when overlapping. `witness` receives
// the point on the segment that realises the value.
double signed_distance(const Segment& s, const Circle& c, Point2* witness = nullptr);
double signed_distance(const Segment& s, const Polygon& poly, Point2* witness = nullptr);

bool is_convex(const Polygon& poly);
// Returns a copy with counter-clockwise winding.
Polygon normalized(Polygon poly);

// Andrew monotone chain; collinear points dropped.
std::vector<Point2> convex_hull(std::span<const Point2> points);
double polygon_area(std::span<const Point2> ring);

}  // namespace softhand
