#pragma once

// Tactile localisation: threshold, DoH marker detection, marker-density map,
// contact centre, slip and SSIM deformation.

#include <cstdint>
#include <span>
#include <vector>

#include "softhand/geometry.hpp"
#include "softhand/tactile_sim.hpp"

namespace softhand::perception {

using tactile::Image;

struct Crop {
  int x0 = 0;
  int y0 = 0;
  int width = 240;
  int height = 240;
};

// Pixels of the crop; coordinates stay in frame pixels.
struct BinaryImage {
  Crop crop;
  std::vector<std::uint8_t> bits;

  bool at(int x, int y) const {
    return bits[static_cast<std::size_t>(y - crop.y0) * crop.width + (x - crop.x0)] != 0;
  }
  std::size_t count() const;
};

inline constexpr int kDefaultThreshold = 180;

// True where intensity > threshold. Throws std::invalid_argument for an empty
// crop or one that leaves the frame.
BinaryImage preprocess(const Image& frame, const Crop& crop, int threshold = kDefaultThreshold);

struct Marker {
  Point2 position;
  double response = 0.0;
  double sigma = 0.0;
};

struct DohConfig {
  double sigma_min = 2.0;
  double sigma_max = 6.0;
  int scales = 3;
  double response_floor = 0.1;  // relative to the strongest response
};

std::vector<double> doh_scales(const DohConfig& config);

// Scale-normalised determinant of Hessian sigma^4 (Lxx Lyy - Lxy^2) of the
// Gaussian-smoothed binary image, one crop-sized plane per scale.
std::vector<std::vector<double>> doh_response(const BinaryImage& binary, const DohConfig& config);

// Throws std::invalid_argument unless sigma_min < sigma_max.
std::vector<Marker> detect_markers_doh(const BinaryImage& binary, const DohConfig& config = {});

std::vector<Point2> positions(std::span<const Marker> markers);

// Mean nearest-neighbour distance. Throws std::invalid_argument below 2 markers.
double kernel_width(std::span<const Point2> markers);

struct GridSpec {
  double x0 = 60.0;
  double y0 = 60.0;
  double step = 2.0;
  int nx = 61;
  int ny = 61;

  double x(int i) const { return x0 + step * i; }
  double y(int j) const { return y0 + step * j; }
};

struct DensityGrid {
  GridSpec spec;
  double h = 0.0;
  std::vector<double> values;  // row-major, ny rows of nx

  double at(int i, int j) const { return values[static_cast<std::size_t>(j) * spec.nx + i]; }
};

// Gaussian kernel density with prefactor 1 / (sqrt(2 pi) h^2).
// Throws std::invalid_argument for no markers or h <= 0.
DensityGrid density_map(std::span<const Point2> markers, double h, const GridSpec& spec = {});

inline constexpr double kDefaultContactFactor = 0.6;

struct ContactEstimate {
  bool is_contact = false;
  Point2 center;
  double contact_area = 0.0;  // px^2
  double min_density = 0.0;
};

// Throws std::invalid_argument for grids of different shape.
ContactEstimate contact_estimate(const DensityGrid& density, const DensityGrid& baseline,
                                 double beta = kDefaultContactFactor);

struct SlipState {
  bool is_contact = false;
  bool is_slip = false;
  Point2 center;
  double displacement = 0.0;
};

inline constexpr double kDefaultSlipThreshold = 3.0;

SlipState detect_slip(const SlipState& prev, const ContactEstimate& estimate,
                      double threshold = kDefaultSlipThreshold);

// Mean SSIM over all 8x8 windows (stride 1), L = 255, k1 = 0.01, k2 = 0.03.
// Throws std::invalid_argument for mismatched or too-small frames.
double ssim(const Image& a, const Image& b);
double deformation(const Image& frame, const Image& reference);

struct Calibration {
  double force_slope = 40.0;  // N per unit deformation
  double target = 0.05;
};

double force_from_deformation(double d, const Calibration& cal = {});

struct PerceptionConfig {
  Crop crop;
  int threshold = kDefaultThreshold;
  DohConfig doh;
  GridSpec grid;
  double contact_factor = kDefaultContactFactor;
  double slip_threshold = kDefaultSlipThreshold;
  Calibration calibration;
};

struct FrameAnalysis {
  std::vector<Marker> markers;
  double h = 0.0;
  DensityGrid density;
  ContactEstimate contact;
  double deformation = 0.0;
  double force = 0.0;
};

// One sensor stream against its undeformed reference frame. Frames equal to
// the reference or to the previous frame reuse the earlier analysis.
class TactilePipeline {
 public:
  TactilePipeline(PerceptionConfig config, Image reference);

  const FrameAnalysis& analyze(const Image& frame);
  const FrameAnalysis& baseline() const { return baseline_; }
  const PerceptionConfig& config() const { return config_; }
  const Image& reference() const { return reference_; }

 private:
  FrameAnalysis compute(const Image& frame) const;

  PerceptionConfig config_;
  Image reference_;
  FrameAnalysis baseline_;
  Image last_frame_;
  FrameAnalysis last_;
};

}  // namespace softhand::perception
