#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "softhand/perception.hpp"

using namespace softhand;
using namespace softhand::perception;
using tactile::hex_layout;
using tactile::render_frame;

namespace {

double brute_density(const std::vector<Point2>& pts, double h, double x, double y) {
  double s = 0.0;
  for (Point2 p : pts) {
    s += 1.0 / (std::sqrt(2.0 * std::numbers::pi) * h * h) *
         std::exp(-((x - p.x) * (x - p.x) + (y - p.y) * (y - p.y)) / (2.0 * h * h));
  }
  return s / static_cast<double>(pts.size());
}

}  // namespace

TEST_CASE("threshold is strict at 180") {
  Image img(4, 1);
  img.at(0, 0) = 181;
  img.at(1, 0) = 180;
  img.at(2, 0) = 255;
  const BinaryImage b = preprocess(img, {0, 0, 4, 1});
  CHECK(b.at(0, 0));
  CHECK_FALSE(b.at(1, 0));
  CHECK(b.at(2, 0));
  CHECK_FALSE(b.at(3, 0));
  CHECK(preprocess(Image(10, 10), {0, 0, 10, 10}).count() == 0);
  CHECK_THROWS_AS(preprocess(img, {0, 0, 0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(preprocess(img, {2, 0, 4, 1}), std::invalid_argument);
}

TEST_CASE("thresholded marker area matches the disc area") {
  const auto l = hex_layout();
  const BinaryImage b = preprocess(render_frame(l.positions, l), {});
  const double expect = 61 * std::numbers::pi * l.marker_radius * l.marker_radius;
  CHECK(std::abs(static_cast<double>(b.count()) - expect) <= 0.05 * expect);
}

TEST_CASE("DoH detection") {
  CHECK(detect_markers_doh(preprocess(Image(50, 50), {0, 0, 50, 50})).empty());
  CHECK_THROWS_AS(detect_markers_doh(preprocess(Image(50, 50), {0, 0, 50, 50}), DohConfig{6.0, 2.0, 3, 0.1}),
                  std::invalid_argument);

  tactile::MarkerLayout l;
  l.width = 50;
  l.height = 50;
  const BinaryImage b = preprocess(render_frame({{20.0, 20.0}}, l), {0, 0, 50, 50});
  const auto m = detect_markers_doh(b);
  REQUIRE(m.size() == 1);
  CHECK(distance(m[0].position, {20.0, 20.0}) <= 1.0);

  // Exhaustive argmax over every pixel and scale of the response planes.
  const auto planes = doh_response(b, {});
  double best = -1.0;
  int bx = -1;
  int by = -1;
  for (const auto& p : planes) {
    for (int y = 0; y < 50; ++y) {
      for (int x = 0; x < 50; ++x) {
        if (p[y * 50 + x] > best) {
          best = p[y * 50 + x];
          bx = x;
          by = y;
        }
      }
    }
  }
  CHECK(m[0].response == best);
  CHECK(std::abs(m[0].position.x - bx) <= 0.5);
  CHECK(std::abs(m[0].position.y - by) <= 0.5);
}

TEST_CASE("all markers found on an uncontacted frame") {
  const auto l = hex_layout();
  const auto m = detect_markers_doh(preprocess(render_frame(l.positions, l), {}));
  CHECK(m.size() == l.positions.size());
  for (Point2 p : l.positions) {
    double best = std::numeric_limits<double>::infinity();
    for (const Marker& d : m) best = std::min(best, distance(p, d.position));
    CHECK(best <= 1.0);
  }
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) CHECK(distance(m[i].position, m[j].position) > 2.0);
  }
}

TEST_CASE("kernel width") {
  const std::vector<Point2> two{{0, 0}, {10, 0}};
  CHECK(kernel_width(two) == 10.0);
  const std::vector<Point2> square{{0, 0}, {10, 0}, {0, 10}, {10, 10}};
  CHECK(kernel_width(square) == 10.0);
  CHECK(kernel_width(hex_layout(4, 17.5).positions) == doctest::Approx(17.5).epsilon(1e-11));
  CHECK(std::abs(kernel_width(hex_layout().positions) - 25.0) <= 1e-9);
  CHECK_THROWS_AS(kernel_width(std::vector<Point2>{{1, 1}}), std::invalid_argument);
}

TEST_CASE("density map") {
  const std::vector<Point2> one{{10.0, 10.0}};
  const GridSpec spec{0.0, 0.0, 1.0, 21, 21};
  const DensityGrid g = density_map(one, 1.0, spec);
  CHECK(g.at(10, 10) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-15));
  CHECK(density_map(one, 1.0, {100.0, 100.0, 1.0, 3, 3}).at(1, 1) < 1e-12);
  CHECK_THROWS_AS(density_map(std::vector<Point2>{}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(density_map(one, 0.0), std::invalid_argument);

  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(40.0, 200.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Point2> pts(20);
    for (Point2& p : pts) p = {u(rng), u(rng)};
    const double h = kernel_width(pts);
    const DensityGrid d = density_map(pts, h);
    for (int j = 0; j < d.spec.ny; ++j) {
      for (int i = 0; i < d.spec.nx; ++i) {
        CHECK(std::abs(d.at(i, j) - brute_density(pts, h, d.spec.x(i), d.spec.y(j))) <= 1e-12);
      }
    }
  }
}

TEST_CASE("contact estimate") {
  const auto l = hex_layout();
  const auto base_pts = l.positions;
  const double h = kernel_width(base_pts);
  const DensityGrid base = density_map(base_pts, h);
  CHECK_FALSE(contact_estimate(base, base).is_contact);

  const auto moved = tactile::displace_markers(l, tactile::indentation_at({120, 120}, 0.6));
  const DensityGrid d = density_map(moved, kernel_width(moved));
  const ContactEstimate e = contact_estimate(d, base);
  REQUIRE(e.is_contact);
  CHECK(distance(e.center, {120, 120}) <= 0.5 * d.h);
  CHECK(e.contact_area > 0.0);

  // Exhaustive scan, ties to lowest y then x.
  std::size_t arg = 0;
  for (std::size_t k = 0; k < d.values.size(); ++k) {
    if (d.values[k] < d.values[arg]) arg = k;
  }
  CHECK(e.center.x == d.spec.x(static_cast<int>(arg % d.spec.nx)));
  CHECK(e.center.y == d.spec.y(static_cast<int>(arg / d.spec.nx)));

  DensityGrid wrong = base;
  wrong.spec.nx = 3;
  CHECK_THROWS_AS(contact_estimate(d, wrong), std::invalid_argument);
}

TEST_CASE("contact ties break towards the lowest row then column") {
  DensityGrid g;
  g.spec = {0.0, 0.0, 1.0, 3, 3};
  g.values = {5, 5, 5, 5, 1, 1, 1, 5, 5};
  DensityGrid base = g;
  base.values.assign(9, 10.0);
  const ContactEstimate e = contact_estimate(g, base);
  CHECK(e.is_contact);
  CHECK(e.center == Point2{1.0, 1.0});
  CHECK(e.contact_area == 9.0);
}

TEST_CASE("decision is invariant to density scale") {
  const auto l = hex_layout();
  const DensityGrid base = density_map(l.positions, 25.0);
  const auto moved = tactile::displace_markers(l, tactile::indentation_at({131, 112}, 0.5));
  const DensityGrid d = density_map(moved, kernel_width(moved));
  const ContactEstimate e = contact_estimate(d, base);
  for (double c : {0.5, 3.0, 1e4}) {
    DensityGrid ds = d;
    DensityGrid bs = base;
    for (double& v : ds.values) v *= c;
    for (double& v : bs.values) v *= c;
    const ContactEstimate es = contact_estimate(ds, bs);
    CHECK(es.is_contact == e.is_contact);
    CHECK(es.center == e.center);
  }
}

TEST_CASE("argmin shifts with the markers") {
  const auto l = hex_layout();
  const auto moved = tactile::displace_markers(l, tactile::indentation_at({118, 122}, 0.6));
  const double h = kernel_width(moved);
  const GridSpec spec{60.0, 60.0, 1.0, 121, 121};
  const DensityGrid base = density_map(l.positions, 25.0, spec);
  const ContactEstimate e0 = contact_estimate(density_map(moved, h, spec), base);
  REQUIRE(e0.is_contact);
  for (auto [dx, dy] : {std::pair{3, -2}, std::pair{-5, 4}}) {
    std::vector<Point2> shifted = moved;
    for (Point2& p : shifted) p = p + Point2{double(dx), double(dy)};
    const GridSpec s2{spec.x0 + dx, spec.y0 + dy, 1.0, 121, 121};
    const DensityGrid base2 = density_map(l.positions, 25.0, s2);
    const DensityGrid d2 = density_map(shifted, h, s2);
    std::size_t a0 = 0;
    std::size_t a1 = 0;
    const DensityGrid d0 = density_map(moved, h, spec);
    for (std::size_t k = 0; k < d0.values.size(); ++k) {
      if (d0.values[k] < d0.values[a0]) a0 = k;
      if (d2.values[k] < d2.values[a1]) a1 = k;
    }
    CHECK(a0 == a1);
    (void)base2;
  }
}

TEST_CASE("slip detection") {
  ContactEstimate none;
  CHECK_FALSE(detect_slip({}, none).is_slip);
  ContactEstimate a;
  a.is_contact = true;
  a.center = {100, 100};
  const SlipState s1 = detect_slip({}, a, 3.0);
  CHECK(s1.is_contact);
  CHECK_FALSE(s1.is_slip);
  ContactEstimate b = a;
  b.center = {101.2, 100};
  CHECK_FALSE(detect_slip(s1, b, 3.0).is_slip);
  b.center = {104.5, 100};
  const SlipState s2 = detect_slip(s1, b, 3.0);
  CHECK(s2.is_slip);
  CHECK(s2.displacement == doctest::Approx(4.5));
  b.center = {103.0, 100};
  CHECK_FALSE(detect_slip(s1, b, 3.0).is_slip);  // strict
  CHECK_FALSE(detect_slip(s2, none, 3.0).is_slip);
  CHECK_THROWS_AS(detect_slip(s1, b, 0.0), std::invalid_argument);
}

TEST_CASE("SSIM and deformation") {
  const auto l = hex_layout();
  const Image ref = render_frame(l.positions, l);
  CHECK(ssim(ref, ref) == 1.0);
  CHECK(deformation(ref, ref) == 0.0);

  const double c1 = (0.01 * 255) * (0.01 * 255);
  CHECK(ssim(Image(16, 16, 0), Image(16, 16, 255)) == doctest::Approx(c1 / (255.0 * 255.0 + c1)).epsilon(1e-12));
  CHECK(ssim(Image(16, 16, 0), Image(16, 16, 255)) == doctest::Approx(1.0e-4).epsilon(0.01));
  CHECK_THROWS_AS(ssim(Image(16, 16), Image(16, 17)), std::invalid_argument);
  CHECK_THROWS_AS(ssim(Image(4, 4), Image(4, 4)), std::invalid_argument);

  double prev = 0.0;
  for (int k = 1; k <= 9; ++k) {
    const Image f = render_frame(tactile::displace_markers(l, tactile::indentation_at({120, 120}, k / 10.0)), l);
    const double d = deformation(f, ref);
    CHECK(d > prev);
    prev = d;
  }
}

TEST_CASE("force calibration") {
  CHECK(force_from_deformation(0.0) == 0.0);
  CHECK(force_from_deformation(0.05) == doctest::Approx(2.0));
  CHECK(force_from_deformation(0.10) == doctest::Approx(4.0));
}

TEST_CASE("pipeline reuses the baseline analysis") {
  const auto l = hex_layout();
  const Image ref = render_frame(l.positions, l);
  TactilePipeline p({}, ref);
  CHECK(p.baseline().markers.size() == 61);
  CHECK_FALSE(p.analyze(ref).contact.is_contact);
  CHECK(&p.analyze(ref) == &p.baseline());
  const Image f = render_frame(tactile::displace_markers(l, tactile::indentation_at({125, 118}, 0.5)), l);
  const FrameAnalysis& a = p.analyze(f);
  CHECK(a.contact.is_contact);
  CHECK(a.force == doctest::Approx(40.0 * a.deformation));
  CHECK(distance(a.contact.center, {125, 118}) <= 0.5 * a.h);
}
