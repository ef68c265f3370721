#pragma once

// Synthetic marker-pin fingertip: a hexagonal marker field on a dark
// background, pushed radially outward by an indentation.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "softhand/geometry.hpp"

namespace softhand::tactile {

// 8-bit grayscale, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0);

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  friend bool operator==(const Image&, const Image&) = default;
};

struct MarkerLayout {
  std::vector<Point2> positions;
  double marker_radius = 4.0;
  int width = 240;
  int height = 240;

  // Throws std::invalid_argument.
  void validate() const;
};

// Hexagon with `rings` rings around one marker: 1 + 3*rings*(rings+1)
// markers. Defaults give 61 markers at 25 px pitch on a 240 x 240 frame. The
// hexagon is shifted up by a third of a row so the image centre is not a
// marker position.
MarkerLayout hex_layout(int rings = 4, double pitch = 25.0, double marker_radius = 4.0, int width = 240,
                        int height = 240);

struct Indentation {
  Point2 center{120.0, 120.0};
  double depth = 0.0;    // 0 is the undeformed reference
  double radius = 75.0;  // px
};

// cos^2(pi s / 2) on [0, 1], zero beyond.
double falloff(double s);

std::vector<Point2> displace_markers(const MarkerLayout& layout, const Indentation& ind);

// Anti-aliased discs of the layout radius; overlapping discs take the max.
Image render_frame(const std::vector<Point2>& markers, const MarkerLayout& layout);

// Maps a pad contact on the distal phalanx to a sensor-frame indentation.
struct SensorMapping {
  double px_per_mm = 4.0;
  double phalanx_length = 35.0;  // mm, along which contact position u runs
  double max_penetration = 2.0;  // mm at which depth saturates at 1
  Point2 image_center{120.0, 120.0};
  // The pressed patch widens with depth: radius_min at 0, radius_max at 1.
  double radius_min = 70.0;
  double radius_max = 90.0;
};

// Indentation of the given depth (clamped to [0, 1]) at a sensor-frame centre.
Indentation indentation_at(Point2 center, double depth, const SensorMapping& mapping = {});

// `u` is the contact position along the phalanx in mm from its proximal end.
Indentation indentation_from_contact(double penetration, double u, const SensorMapping& mapping = {});

// Binary PGM (P5, maxval 255). Throws std::runtime_error on I/O or format errors.
void write_pgm(const std::filesystem::path& path, const Image& image);
Image read_pgm(const std::filesystem::path& path);

}  // namespace softhand::tactile
