#include "softhand/perception.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace softhand::perception {

std::size_t BinaryImage::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

BinaryImage preprocess(const Image& frame, const Crop& crop, int threshold) {
  if (crop.width <= 0 || crop.height <= 0) throw std::invalid_argument("empty crop");
  if (crop.x0 < 0 || crop.y0 < 0 || crop.x0 + crop.width > frame.width || crop.y0 + crop.height > frame.height) {
    throw std::invalid_argument("crop leaves the frame");
  }
  BinaryImage out;
  out.crop = crop;
  out.bits.resize(static_cast<std::size_t>(crop.width) * crop.height);
  for (int y = 0; y < crop.height; ++y) {
    for (int x = 0; x < crop.width; ++x) {
      out.bits[static_cast<std::size_t>(y) * crop.width + x] = frame.at(crop.x0 + x, crop.y0 + y) > threshold;
    }
  }
  return out;
}

namespace {

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable blur with zero padding outside the crop.
std::vector<double> smooth(const std::vector<double>& img, int w, int h, double sigma) {
  const std::vector<double> k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  std::vector<double> tmp(img.size(), 0.0);
  std::vector<double> out(img.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = std::max(-radius, -x); i <= std::min(radius, w - 1 - x); ++i) {
        acc += k[i + radius] * img[static_cast<std::size_t>(y) * w + x + i];
      }
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = std::max(-radius, -y); i <= std::min(radius, h - 1 - y); ++i) {
        acc += k[i + radius] * tmp[static_cast<std::size_t>(y + i) * w + x];
      }
      out[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  return out;
}

}  // namespace

std::vector<double> doh_scales(const DohConfig& config) {
  if (!(config.sigma_min > 0.0 && config.sigma_min < config.sigma_max)) {
    throw std::invalid_argument("DoH needs 0 < sigma_min < sigma_max");
  }
  if (config.scales < 2) throw std::invalid_argument("DoH needs at least two scales");
  std::vector<double> s(config.scales);
  for (int i = 0; i < config.scales; ++i) {
    s[i] = config.sigma_min + (config.sigma_max - config.sigma_min) * i / (config.scales - 1);
  }
  return s;
}

std::vector<std::vector<double>> doh_response(const BinaryImage& binary, const DohConfig& config) {
  const int w = binary.crop.width;
  const int h = binary.crop.height;
  std::vector<double> img(binary.bits.begin(), binary.bits.end());
  std::vector<std::vector<double>> planes;
  for (double sigma : doh_scales(config)) {
    const std::vector<double> L = smooth(img, w, h, sigma);
    std::vector<double> det(L.size(), 0.0);
    const double norm4 = sigma * sigma * sigma * sigma;
    const auto v = [&](int x, int y) { return L[static_cast<std::size_t>(y) * w + x]; };
    for (int y = 1; y + 1 < h; ++y) {
      for (int x = 1; x + 1 < w; ++x) {
        const double lxx = v(x + 1, y) - 2.0 * v(x, y) + v(x - 1, y);
        const double lyy = v(x, y + 1) - 2.0 * v(x, y) + v(x, y - 1);
        const double lxy = 0.25 * (v(x + 1, y + 1) - v(x + 1, y - 1) - v(x - 1, y + 1) + v(x - 1, y - 1));
        // Bright blobs only: negative trace.
        if (lxx + lyy < 0.0) det[static_cast<std::size_t>(y) * w + x] = norm4 * (lxx * lyy - lxy * lxy);
      }
    }
    planes.push_back(std::move(det));
  }
  return planes;
}

std::vector<Marker> detect_markers_doh(const BinaryImage& binary, const DohConfig& config) {
  const std::vector<double> sigmas = doh_scales(config);
  if (binary.count() == 0) return {};
  const int w = binary.crop.width;
  const int h = binary.crop.height;
  const auto planes = doh_response(binary, config);

  double peak = 0.0;
  for (const auto& p : planes) peak = std::max(peak, *std::max_element(p.begin(), p.end()));
  if (!(peak > 0.0)) return {};
  const double floor = config.response_floor * peak;

  struct Candidate {
    int x;
    int y;
    std::size_t scale;
    double response;
  };
  std::vector<Candidate> cand;
  for (std::size_t s = 0; s < planes.size(); ++s) {
    const auto& p = planes[s];
    const auto v = [&](int x, int y) { return p[static_cast<std::size_t>(y) * w + x]; };
    for (int y = 1; y + 1 < h; ++y) {
      for (int x = 1; x + 1 < w; ++x) {
        const double c = v(x, y);
        if (c <= floor) continue;
        bool is_max = true;
        for (int dy = -1; dy <= 1 && is_max; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if ((dx || dy) && v(x + dx, y + dy) >= c) {
              is_max = false;
              break;
            }
          }
        }
        if (is_max) cand.push_back({x, y, s, c});
      }
    }
  }
  std::stable_sort(cand.begin(), cand.end(), [](const Candidate& a, const Candidate& b) {
    if (a.response != b.response) return a.response > b.response;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });

  std::vector<Marker> out;
  for (const Candidate& c : cand) {
    const auto& p = planes[c.scale];
    const auto v = [&](int x, int y) { return p[static_cast<std::size_t>(y) * w + x]; };
    const auto offset = [](double m, double z, double q) {
      const double den = m - 2.0 * z + q;
      return den < 0.0 ? std::clamp(0.5 * (m - q) / den, -0.5, 0.5) : 0.0;
    };
    const Point2 pos{binary.crop.x0 + c.x + offset(v(c.x - 1, c.y), c.response, v(c.x + 1, c.y)),
                     binary.crop.y0 + c.y + offset(v(c.x, c.y - 1), c.response, v(c.x, c.y + 1))};
    const bool suppressed = std::any_of(out.begin(), out.end(), [&](const Marker& m) {
      return distance(m.position, pos) <= m.sigma;
    });
    if (!suppressed) out.push_back({pos, c.response, sigmas[c.scale]});
  }
  return out;
}

std::vector<Point2> positions(std::span<const Marker> markers) {
  std::vector<Point2> p;
  p.reserve(markers.size());
  for (const Marker& m : markers) p.push_back(m.position);
  return p;
}

double kernel_width(std::span<const Point2> markers) {
  if (markers.size() < 2) throw std::invalid_argument("kernel width needs at least two markers");
  double total = 0.0;
  for (std::size_t i = 0; i < markers.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < markers.size(); ++j) {
      if (i != j) best = std::min(best, distance(markers[i], markers[j]));
    }
    total += best;
  }
  return total / static_cast<double>(markers.size());
}

DensityGrid density_map(std::span<const Point2> markers, double h, const GridSpec& spec) {
  if (markers.empty()) throw std::invalid_argument("density map needs markers");
  if (!(h > 0.0)) throw std::invalid_argument("kernel width must be positive");
  if (spec.nx <= 0 || spec.ny <= 0 || !(spec.step > 0.0)) throw std::invalid_argument("bad grid spec");
  DensityGrid g;
  g.spec = spec;
  g.h = h;
  g.values.assign(static_cast<std::size_t>(spec.nx) * spec.ny, 0.0);
  const double pre = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * h * h);
  const double inv = 1.0 / (2.0 * h * h);
  const double m = static_cast<double>(markers.size());
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) {
      double sum = 0.0;
      for (const Point2& p : markers) {
        const double dx = spec.x(i) - p.x;
        const double dy = spec.y(j) - p.y;
        sum += pre * std::exp(-(dx * dx + dy * dy) * inv);
      }
      g.values[static_cast<std::size_t>(j) * spec.nx + i] = sum / m;
    }
  }
  return g;
}

ContactEstimate contact_estimate(const DensityGrid& density, const DensityGrid& baseline, double beta) {
  if (density.spec.nx != baseline.spec.nx || density.spec.ny != baseline.spec.ny ||
      density.values.size() != baseline.values.size()) {
    throw std::invalid_argument("density grids differ in shape");
  }
  ContactEstimate e;
  std::size_t arg = 0;
  std::size_t below = 0;
  for (std::size_t k = 0; k < density.values.size(); ++k) {
    if (density.values[k] < density.values[arg]) arg = k;
    if (density.values[k] < beta * baseline.values[k]) ++below;
  }
  const double base_min = *std::min_element(baseline.values.begin(), baseline.values.end());
  e.min_density = density.values[arg];
  e.is_contact = e.min_density < beta * base_min;
  e.contact_area = static_cast<double>(below) * density.spec.step * density.spec.step;
  if (e.is_contact) {
    const int i = static_cast<int>(arg % density.spec.nx);
    const int j = static_cast<int>(arg / density.spec.nx);
    e.center = {density.spec.x(i), density.spec.y(j)};
  }
  return e;
}

SlipState detect_slip(const SlipState& prev, const ContactEstimate& estimate, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("slip threshold must be positive");
  SlipState s;
  s.is_contact = estimate.is_contact;
  if (!estimate.is_contact) return s;
  s.center = estimate.center;
  if (prev.is_contact) {
    s.displacement = distance(estimate.center, prev.center);
    s.is_slip = s.displacement > threshold;
  }
  return s;
}

namespace {

// Summed-area table with a zero first row and column.
template <typename F>
std::vector<std::int64_t> integral(int w, int h, F f) {
  std::vector<std::int64_t> t(static_cast<std::size_t>(w + 1) * (h + 1), 0);
  for (int y = 0; y < h; ++y) {
    std::int64_t row = 0;
    for (int x = 0; x < w; ++x) {
      row += f(x, y);
      t[static_cast<std::size_t>(y + 1) * (w + 1) + x + 1] = t[static_cast<std::size_t>(y) * (w + 1) + x + 1] + row;
    }
  }
  return t;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
  constexpr int kWin = 8;
  if (a.width != b.width || a.height != b.height) throw std::invalid_argument("SSIM frames differ in size");
  if (a.width < kWin || a.height < kWin) throw std::invalid_argument("SSIM frames smaller than the window");
  const int w = a.width;
  const int h = a.height;
  const auto sa = integral(w, h, [&](int x, int y) { return std::int64_t{a.at(x, y)}; });
  const auto sb = integral(w, h, [&](int x, int y) { return std::int64_t{b.at(x, y)}; });
  const auto saa = integral(w, h, [&](int x, int y) { return std::int64_t{a.at(x, y)} * a.at(x, y); });
  const auto sbb = integral(w, h, [&](int x, int y) { return std::int64_t{b.at(x, y)} * b.at(x, y); });
  const auto sab = integral(w, h, [&](int x, int y) { return std::int64_t{a.at(x, y)} * b.at(x, y); });
  const auto box = [&](const std::vector<std::int64_t>& t, int x, int y) {
    const auto at = [&](int xx, int yy) { return t[static_cast<std::size_t>(yy) * (w + 1) + xx]; };
    return at(x + kWin, y + kWin) - at(x, y + kWin) - at(x + kWin, y) + at(x, y);
  };

  constexpr double L = 255.0;
  constexpr double c1 = (0.01 * L) * (0.01 * L);
  constexpr double c2 = (0.03 * L) * (0.03 * L);
  constexpr double n = kWin * kWin;
  double total = 0.0;
  std::size_t windows = 0;
  for (int y = 0; y + kWin <= h; ++y) {
    for (int x = 0; x + kWin <= w; ++x) {
      const double mx = box(sa, x, y) / n;
      const double my = box(sb, x, y) / n;
      const double vx = box(saa, x, y) / n - mx * mx;
      const double vy = box(sbb, x, y) / n - my * my;
      const double cxy = box(sab, x, y) / n - mx * my;
      const double num = (2.0 * mx * my + c1) * (2.0 * cxy + c2);
      const double den = (mx * mx + my * my + c1) * (vx + vy + c2);
      total += num / den;
      ++windows;
    }
  }
  return total / static_cast<double>(windows);
}

double deformation(const Image& frame, const Image& reference) {
  return std::clamp(1.0 - ssim(frame, reference), 0.0, 1.0);
}

double force_from_deformation(double d, const Calibration& cal) {
  if (!(cal.force_slope > 0.0)) throw std::invalid_argument("force slope must be positive");
  return cal.force_slope * d;
}

TactilePipeline::TactilePipeline(PerceptionConfig config, Image reference)
    : config_(std::move(config)), reference_(std::move(reference)) {
  const auto markers = detect_markers_doh(preprocess(reference_, config_.crop, config_.threshold), config_.doh);
  const auto pts = positions(markers);
  baseline_.markers = markers;
  baseline_.h = kernel_width(pts);
  baseline_.density = density_map(pts, baseline_.h, config_.grid);
  baseline_.contact = contact_estimate(baseline_.density, baseline_.density, config_.contact_factor);
  last_frame_ = reference_;
  last_ = baseline_;
}

const FrameAnalysis& TactilePipeline::analyze(const Image& frame) {
  if (frame == reference_) return baseline_;
  if (frame != last_frame_) {
    last_ = compute(frame);
    last_frame_ = frame;
  }
  return last_;
}

FrameAnalysis TactilePipeline::compute(const Image& frame) const {
  FrameAnalysis out;
  out.markers = detect_markers_doh(preprocess(frame, config_.crop, config_.threshold), config_.doh);
  const auto pts = positions(out.markers);
  out.h = pts.size() >= 2 ? kernel_width(pts) : baseline_.h;
  if (pts.empty()) {
    out.density = baseline_.density;
    std::fill(out.density.values.begin(), out.density.values.end(), 0.0);
  } else {
    out.density = density_map(pts, out.h, config_.grid);
  }
  out.contact = contact_estimate(out.density, baseline_.density, config_.contact_factor);
  out.deformation = deformation(frame, reference_);
  out.force = force_from_deformation(out.deformation, config_.calibration);
  return out;
}

}  // namespace softhand::perception
