#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "softhand/tactile_sim.hpp"

using namespace softhand;
using namespace softhand::tactile;

TEST_CASE("hexagonal layout") {
  const MarkerLayout l = hex_layout();
  CHECK(l.positions.size() == 61);
  CHECK_NOTHROW(l.validate());
  CHECK(hex_layout(1).positions.size() == 7);

  MarkerLayout bad = l;
  bad.positions[0] = {2.0, 2.0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = l;
  bad.positions[1] = bad.positions[0] + Point2{5.0, 0.0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("falloff") {
  CHECK(falloff(0.0) == 1.0);
  CHECK(falloff(1.0) == 0.0);
  CHECK(falloff(2.0) == 0.0);
  CHECK(falloff(0.5) == doctest::Approx(0.5));
  for (double s = 0.0; s < 1.0; s += 0.01) CHECK(falloff(s + 0.01) <= falloff(s));
}

TEST_CASE("marker displacement") {
  MarkerLayout l;
  l.positions = {{120, 120}, {150, 120}, {120, 60}, {10, 10}};
  Indentation ind;
  ind.center = {120, 120};
  ind.radius = 60.0;
  ind.depth = 0.0;
  CHECK(displace_markers(l, ind) == l.positions);

  ind.depth = 1.0;
  const auto moved = displace_markers(l, ind);
  CHECK(moved.size() == l.positions.size());
  CHECK(moved[0] == l.positions[0]);  // at the centre
  // R/2 away, depth 1: shifted by R * g(1/2) = 30 along the ray.
  CHECK(moved[1].x == doctest::Approx(180.0));
  CHECK(moved[1].y == doctest::Approx(120.0));
  CHECK(moved[2] == l.positions[2]);  // exactly at R
  CHECK(moved[3] == l.positions[3]);
}

TEST_CASE("displacement commutes with rotation about the centre") {
  const MarkerLayout l = hex_layout();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(90.0, 150.0);
  std::uniform_real_distribution<double> a(0.0, 2 * std::numbers::pi);
  for (int trial = 0; trial < 20; ++trial) {
    Indentation ind;
    ind.center = {u(rng), u(rng)};
    ind.depth = 0.7;
    const double angle = a(rng);
    const auto rot = [&](Point2 p) {
      const Point2 v = p - ind.center;
      return ind.center + Point2{std::cos(angle) * v.x - std::sin(angle) * v.y,
                                 std::sin(angle) * v.x + std::cos(angle) * v.y};
    };
    MarkerLayout rotated = l;
    for (Point2& p : rotated.positions) p = rot(p);
    const auto a1 = displace_markers(rotated, ind);
    const auto a2 = displace_markers(l, ind);
    for (std::size_t i = 0; i < a1.size(); ++i) {
      const Point2 b = rot(a2[i]);
      CHECK(a1[i].x == doctest::Approx(b.x).epsilon(1e-9));
      CHECK(a1[i].y == doctest::Approx(b.y).epsilon(1e-9));
    }
  }
}

TEST_CASE("mean distance from the centre grows with depth") {
  const MarkerLayout l = hex_layout();
  double prev = 0.0;
  for (int k = 0; k <= 10; ++k) {
    const auto m = displace_markers(l, indentation_at({115.0, 128.0}, k / 10.0));
    double mean = 0.0;
    for (Point2 p : m) mean += distance(p, {115.0, 128.0});
    mean /= static_cast<double>(m.size());
    CHECK(mean >= prev);
    prev = mean;
  }
}

TEST_CASE("rendering") {
  MarkerLayout l;
  l.width = 40;
  l.height = 40;
  l.marker_radius = 3.0;
  CHECK(render_frame({}, l) == Image(40, 40));
  const Image img = render_frame({{20.0, 20.0}}, l);
  CHECK(img.at(20, 20) == 255);
  CHECK(img.at(20, 28) == 0);
  CHECK(img.at(23, 20) == 128);  // half-covered rim pixel
  CHECK(render_frame({{20.0, 20.0}}, l) == img);
}

TEST_CASE("contact to indentation mapping") {
  SensorMapping m;
  CHECK(indentation_from_contact(0.0, 17.5, m).depth == 0.0);
  CHECK(indentation_from_contact(m.max_penetration, 17.5, m).depth == 1.0);
  CHECK(indentation_from_contact(0.5 * m.max_penetration, 17.5, m).depth == doctest::Approx(0.5));
  CHECK(indentation_from_contact(5.0, 17.5, m).depth == 1.0);
  const Indentation ind = indentation_from_contact(1.0, 27.5, m);
  CHECK(ind.center.x == doctest::Approx(160.0));
  CHECK(ind.center.y == doctest::Approx(120.0));
  CHECK(ind.radius == doctest::Approx(0.5 * (m.radius_min + m.radius_max)));
  CHECK_THROWS_AS(indentation_from_contact(-0.1, 0.0, m), std::invalid_argument);
}

TEST_CASE("PGM round trip") {
  const MarkerLayout l = hex_layout();
  const Image img = render_frame(displace_markers(l, indentation_at({110, 125}, 0.4)), l);
  const auto path = std::filesystem::temp_directory_path() / "softhand_test_frame.pgm";
  write_pgm(path, img);
  CHECK(read_pgm(path) == img);
  CHECK(std::filesystem::file_size(path) == 15 + 240 * 240);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_pgm(path), std::runtime_error);
}
