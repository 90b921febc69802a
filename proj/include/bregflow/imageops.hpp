#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "bregflow/image.hpp"

namespace bregflow {

// Per-pixel visibility indicator: 1 = visible/valid, 0 = occluded/invalid.
struct OcclusionMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> visible;

  OcclusionMask() = default;
  OcclusionMask(int w, int h, std::uint8_t fill = 1)
      : width(w), height(h), visible(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t& at(int x, int y) { return visible[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return visible[static_cast<std::size_t>(y) * width + x]; }
  std::size_t count_occluded() const;
};

// Spatial derivatives of the frame average plus the temporal differences
// between the two frames, central differences, reflecting boundaries.
struct Derivatives {
  Image fx, fy, fxx, fxy, fyy;
  Image ft, fxt, fyt;
};

// Separable Gaussian convolution, kernel truncated at +-ceil(3 sigma) and
// renormalized; sigma = 0 is the identity.
Image gaussian_smooth(const Image& img, double sigma);

Derivatives derivatives(const Image& frame0, const Image& frame1);

struct PyramidLevel {
  Image f0, f1;
};

// Frame pairs finest first. levels[l+1] dims = round(scale * levels[l] dims).
struct Pyramid {
  std::vector<PyramidLevel> levels;
  double scale = 0.9;
};

// Downsamples with a light Gaussian anti-alias pass before each bilinear
// resampling; stops before the next level's min dimension would drop below
// min_size (min_size >= 8).
Pyramid build_pyramid(const Image& f0, const Image& f1, double scale, int min_size);

// Bilinear resampling to the given size, pixel centers aligned.
Image resize_bilinear(const Image& img, int new_width, int new_height);

// Bilinear sample at real coordinates, clamped to the domain.
double sample_bilinear(const Image& img, double x, double y);

// Backward warp: out(x, y) = img(x + u, y + v). Samples falling outside the
// domain are clamped to the nearest boundary value and flagged (mask = 0).
std::pair<Image, OcclusionMask> warp(const Image& img, const FlowField& flow);

// Componentwise median over a (2r+1)^2 window, reflecting boundaries.
FlowField median_filter_flow(const FlowField& flow, int radius);

// Cross-checking: a pixel is occluded when the backward flow sampled at its
// forward target does not cancel the forward flow within `threshold` pixels,
// or when the target lies outside the image.
OcclusionMask detect_occlusions(const FlowField& flow_fwd, const FlowField& flow_bwd,
                                double threshold);

// Resizes flow between pyramid levels; component values are rescaled by the
// actual per-axis dimension ratio.
FlowField upsample_flow(const FlowField& flow, int new_width, int new_height);

}  // namespace bregflow
