#include "softhand/geometry.hpp"

#include <algorithm>
#include <limits>

namespace softhand {

double closest_parameter(const Segment& s, Point2 p) {
  const Point2 d = s.b - s.a;
  const double len2 = dot(d, d);
  if (len2 <= 0.0) return 0.0;
  return std::clamp(dot(p - s.a, d) / len2, 0.0, 1.0);
}

Point2 point_at(const Segment& s, double t) { return s.a + t * (s.b - s.a); }

double signed_distance(const Segment& s, const Circle& c, Point2* witness) {
  const Point2 q = point_at(s, closest_parameter(s, c.center));
  if (witness) *witness = q;
  return distance(q, c.center) - c.radius;
}

namespace {

bool segments_intersect(const Segment& p, const Segment& q) {
  const auto orient = [](Point2 a, Point2 b, Point2 c) { return cross(b - a, c - a); };
  const double d1 = orient(q.a, q.b, p.a);
  const double d2 = orient(q.a, q.b, p.b);
  const double d3 = orient(p.a, p.b, q.a);
  const double d4 = orient(p.a, p.b, q.b);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  const auto on_segment = [](const Segment& s, Point2 r, double o) {
    return o == 0.0 && std::min(s.a.x, s.b.x) <= r.x && r.x <= std::max(s.a.x, s.b.x) &&
           std::min(s.a.y, s.b.y) <= r.y && r.y <= std::max(s.a.y, s.b.y);
  };
  return on_segment(q, p.a, d1) || on_segment(q, p.b, d2) || on_segment(p, q.a, d3) ||
         on_segment(p, q.b, d4);
}

// Inside depth of p for a CCW convex polygon; negative outside.
double inside_depth(const Polygon& poly, Point2 p) {
  double depth = std::numeric_limits<double>::infinity();
  const auto& v = poly.vertices;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point2 a = v[i];
    const Point2 b = v[(i + 1) % v.size()];
    const Point2 e = b - a;
    depth = std::min(depth, cross(e, p - a) / norm(e));
  }
  return depth;
}

}  // namespace

double signed_distance(const Segment& s, const Polygon& poly, Point2* witness) {
  const auto& v = poly.vertices;
  bool overlap = inside_depth(poly, s.a) >= 0.0 || inside_depth(poly, s.b) >= 0.0;
  for (std::size_t i = 0; i < v.size() && !overlap; ++i) {
    overlap = segments_intersect(s, Segment{v[i], v[(i + 1) % v.size()]});
  }

  if (overlap) {
    // Depth along the segment is concave (minimum of affine functions).
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 100; ++it) {
      const double m1 = lo + (hi - lo) / 3.0;
      const double m2 = hi - (hi - lo) / 3.0;
      if (inside_depth(poly, point_at(s, m1)) < inside_depth(poly, point_at(s, m2))) {
        lo = m1;
      } else {
        hi = m2;
      }
    }
    const Point2 q = point_at(s, 0.5 * (lo + hi));
    if (witness) *witness = q;
    return -std::max(0.0, inside_depth(poly, q));
  }

  double best = std::numeric_limits<double>::infinity();
  Point2 best_point = s.a;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Segment edge{v[i], v[(i + 1) % v.size()]};
    for (const Point2 p : {s.a, s.b}) {
      const double d = distance(p, point_at(edge, closest_parameter(edge, p)));
      if (d < best) {
        best = d;
        best_point = p;
      }
    }
    const Point2 q = point_at(s, closest_parameter(s, v[i]));
    const double d = distance(q, v[i]);
    if (d < best) {
      best = d;
      best_point = q;
    }
  }
  if (witness) *witness = best_point;
  return best;
}

bool is_convex(const Polygon& poly) {
  const auto& v = poly.vertices;
  if (v.size() < 3) return false;
  int sign = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double c = cross(v[(i + 1) % v.size()] - v[i], v[(i + 2) % v.size()] - v[(i + 1) % v.size()]);
    if (c == 0.0) continue;
    const int s = c > 0 ? 1 : -1;
    if (sign != 0 && s != sign) return false;
    sign = s;
  }
  return sign != 0;
}

Polygon normalized(Polygon poly) {
  if (polygon_area(poly.vertices) < 0.0) std::reverse(poly.vertices.begin(), poly.vertices.end());
  return poly;
}

std::vector<Point2> convex_hull(std::span<const Point2> points) {
  std::vector<Point2> p(points.begin(), points.end());
  std::sort(p.begin(), p.end(), [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  p.erase(std::unique(p.begin(), p.end()), p.end());
  if (p.size() < 3) return p;

  std::vector<Point2> hull(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p[i] - hull[k - 2]) <= 0) --k;
    hull[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(hull[k - 1] - hull[k - 2], p[i - 1] - hull[k - 2]) <= 0) --k;
    hull[k++] = p[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

double polygon_area(std::span<const Point2> ring) {
  double twice = 0.0;
  for (std::size_t i = 0; i < ring.size(); ++i) twice += cross(ring[i], ring[(i + 1) % ring.size()]);
  return 0.5 * twice;
}

}  // namespace softhand
