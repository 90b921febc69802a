#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "bregflow/image.hpp"
#include "bregflow/imageops.hpp"

namespace bregflow {

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // interleaved r, g, b

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t* pixel(int x, int y) { return &data[(static_cast<std::size_t>(y) * width + x) * 3]; }
  const std::uint8_t* pixel(int x, int y) const {
    return &data[(static_cast<std::size_t>(y) * width + x) * 3];
  }
};

// Middlebury unknown-flow sentinel.
inline bool is_unknown_flow(double u, double v) {
  return std::abs(u) > 1e9 || std::abs(v) > 1e9;
}

struct ErrorReport {
  double aae = 0.0;     // degrees
  double aee = 0.0;     // pixels
  std::size_t n_pixels = 0;
};

// Average angular error in degrees over the spatio-temporal vectors (u, v, 1).
// Pixels with unknown flow in either field, or masked out, are excluded.
double aae_degrees(const FlowField& estimated, const FlowField& truth,
                   const OcclusionMask* valid = nullptr);

// Average endpoint error in pixels.
double aee_pixels(const FlowField& estimated, const FlowField& truth,
                  const OcclusionMask* valid = nullptr);

ErrorReport evaluate_flow(const FlowField& estimated, const FlowField& truth,
                          const OcclusionMask* valid = nullptr);

// Color of a single displacement on the flow color wheel; rad in [0, 1].
std::array<std::uint8_t, 3> flow_wheel_color(double angle_rad, double rad);

// Hue encodes direction, saturation the magnitude; zero flow renders white.
// max_magnitude = 0 selects the 99th percentile of the field's magnitudes;
// larger magnitudes are clamped.
RgbImage colorize_flow(const FlowField& flow, double max_magnitude = 0.0);

}  // namespace bregflow
