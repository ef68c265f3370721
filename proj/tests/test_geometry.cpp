#include <cmath>

#include "doctest.h"
#include "softhand/geometry.hpp"

using namespace softhand;

TEST_CASE("segment to circle clearance") {
  const Segment s{{0, 0}, {10, 0}};
  Point2 w;
  CHECK(signed_distance(s, Circle{{5, 4}, 1.0}, &w) == doctest::Approx(3.0));
  CHECK(w.x == doctest::Approx(5.0));
  CHECK(signed_distance(s, Circle{{13, 4}, 1.0}) == doctest::Approx(4.0));
  CHECK(signed_distance(s, Circle{{5, 0.5}, 1.0}) == doctest::Approx(-0.5));
}

TEST_CASE("segment to polygon clearance") {
  const Polygon square = normalized(Polygon{{{0, 0}, {0, 4}, {4, 4}, {4, 0}}});
  CHECK(is_convex(square));
  CHECK(polygon_area(square.vertices) == doctest::Approx(16.0));
  CHECK(signed_distance(Segment{{-3, 2}, {-1, 2}}, square) == doctest::Approx(1.0));
  CHECK(signed_distance(Segment{{6, 6}, {8, 6}}, square) == doctest::Approx(std::sqrt(8.0)));
  // Crossing the square through its middle: depth is the half width.
  CHECK(signed_distance(Segment{{-1, 2}, {5, 2}}, square) == doctest::Approx(-2.0).epsilon(1e-6));
}

TEST_CASE("convexity and hull") {
  CHECK_FALSE(is_convex(Polygon{{{0, 0}, {4, 0}, {1, 1}, {0, 4}}}));
  const std::vector<Point2> pts{{0, 0}, {2, 0}, {1, 1}, {2, 2}, {0, 2}, {1, 0}};
  const auto hull = convex_hull(pts);
  CHECK(hull.size() == 4);
  CHECK(polygon_area(hull) == doctest::Approx(4.0));
}
