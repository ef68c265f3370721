#include "softhand/tactile_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>

namespace softhand::tactile {

Image::Image(int w, int h, std::uint8_t fill) : width(w), height(h) {
  if (w < 0 || h < 0) throw std::invalid_argument("negative image size");
  pixels.assign(static_cast<std::size_t>(w) * h, fill);
}

void MarkerLayout::validate() const {
  if (positions.size() < 4) throw std::invalid_argument("layout needs at least 4 markers");
  if (!(marker_radius > 0.0)) throw std::invalid_argument("marker radius must be positive");
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const Point2 p = positions[i];
    if (p.x < marker_radius || p.y < marker_radius || p.x > width - 1 - marker_radius ||
        p.y > height - 1 - marker_radius) {
      throw std::invalid_argument("marker " + std::to_string(i) + " too close to the image border");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (distance(p, positions[j]) <= 2.0 * marker_radius) {
        throw std::invalid_argument("markers " + std::to_string(j) + " and " + std::to_string(i) + " overlap");
      }
    }
  }
}

MarkerLayout hex_layout(int rings, double pitch, double marker_radius, int width, int height) {
  MarkerLayout layout;
  layout.marker_radius = marker_radius;
  layout.width = width;
  layout.height = height;
  const double row = pitch * std::sqrt(3.0) / 2.0;
  // Shifted a third of a row up so that no marker sits on the image centre.
  const Point2 c{width / 2.0, height / 2.0 - row / 3.0};
  // Axial coordinates, row by row from the top.
  for (int r = -rings; r <= rings; ++r) {
    for (int q = -rings; q <= rings; ++q) {
      if (std::abs(q) > rings || std::abs(r) > rings || std::abs(q + r) > rings) continue;
      layout.positions.push_back({c.x + pitch * (q + 0.5 * r), c.y + row * r});
    }
  }
  return layout;
}

double falloff(double s) {
  if (s >= 1.0) return 0.0;
  const double c = std::cos(0.5 * std::numbers::pi * std::max(0.0, s));
  return c * c;
}

std::vector<Point2> displace_markers(const MarkerLayout& layout, const Indentation& ind) {
  std::vector<Point2> out = layout.positions;
  if (ind.depth == 0.0) return out;
  for (Point2& p : out) {
    const Point2 v = p - ind.center;
    const double d = norm(v);
    if (d == 0.0 || d >= ind.radius) continue;
    const double shift = ind.depth * ind.radius * falloff(d / ind.radius);
    p = p + (shift / d) * v;
  }
  return out;
}

namespace {
// Width of the anti-aliased rim, px. Narrow enough that the 180 threshold
// keeps the binary disc area within a few percent of pi r^2.
constexpr double kRim = 1.0 / 3.0;
}  // namespace

Image render_frame(const std::vector<Point2>& markers, const MarkerLayout& layout) {
  Image img(layout.width, layout.height);
  const double r = layout.marker_radius;
  for (Point2 m : markers) {
    m.x = std::clamp(m.x, 0.0, layout.width - 1.0);
    m.y = std::clamp(m.y, 0.0, layout.height - 1.0);
    const int x0 = std::max(0, static_cast<int>(std::floor(m.x - r - 1)));
    const int x1 = std::min(layout.width - 1, static_cast<int>(std::ceil(m.x + r + 1)));
    const int y0 = std::max(0, static_cast<int>(std::floor(m.y - r - 1)));
    const int y1 = std::min(layout.height - 1, static_cast<int>(std::ceil(m.y + r + 1)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double cover = std::clamp(0.5 + (r - std::hypot(x - m.x, y - m.y)) / kRim, 0.0, 1.0);
        const auto v = static_cast<std::uint8_t>(std::lround(255.0 * cover));
        img.at(x, y) = std::max(img.at(x, y), v);
      }
    }
  }
  return img;
}

Indentation indentation_at(Point2 center, double depth, const SensorMapping& mapping) {
  Indentation ind;
  ind.center = center;
  ind.depth = std::clamp(depth, 0.0, 1.0);
  ind.radius = mapping.radius_min + (mapping.radius_max - mapping.radius_min) * ind.depth;
  return ind;
}

Indentation indentation_from_contact(double penetration, double u, const SensorMapping& mapping) {
  if (penetration < 0.0) throw std::invalid_argument("penetration must be non-negative");
  const Point2 center{mapping.image_center.x + mapping.px_per_mm * (u - 0.5 * mapping.phalanx_length),
                      mapping.image_center.y};
  return indentation_at(center, penetration / mapping.max_penetration, mapping);
}

void write_pgm(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

namespace {

int read_header_int(std::istream& in) {
  in >> std::ws;
  while (in.peek() == '#') {
    std::string comment;
    std::getline(in, comment);
    in >> std::ws;
  }
  int v = -1;
  in >> v;
  if (!in) throw std::runtime_error("malformed PGM header");
  return v;
}

}  // namespace

Image read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P5") throw std::runtime_error(path.string() + ": not a binary PGM");
  const int w = read_header_int(in);
  const int h = read_header_int(in);
  const int maxval = read_header_int(in);
  if (w <= 0 || h <= 0 || maxval != 255) throw std::runtime_error(path.string() + ": unsupported PGM");
  in.get();
  Image img(w, h);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    throw std::runtime_error(path.string() + ": truncated PGM");
  }
  return img;
}

}  // namespace softhand::tactile
