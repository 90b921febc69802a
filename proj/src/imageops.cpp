#include "bregflow/imageops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bregflow {

std::size_t OcclusionMask::count_occluded() const {
  std::size_t n = 0;
  for (auto v : visible)
    if (v == 0) ++n;
  return n;
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
  for (auto& w : k) w /= sum;
  return k;
}

}  // namespace

Image gaussian_smooth(const Image& img, double sigma) {
  if (sigma < 0.0) throw std::invalid_argument("gaussian_smooth: sigma must be >= 0");
  if (sigma == 0.0) return img;

  const auto kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);

  Image tmp(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double s = 0.0;
      for (int i = -radius; i <= radius; ++i)
        s += kernel[i + radius] * img.at(Image::reflect(x + i, img.width), y);
      tmp.at(x, y) = s;
    }
  Image out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double s = 0.0;
      for (int i = -radius; i <= radius; ++i)
        s += kernel[i + radius] * tmp.at(x, Image::reflect(y + i, img.height));
      out.at(x, y) = s;
    }
  return out;
}

Derivatives derivatives(const Image& frame0, const Image& frame1) {
  if (!frame0.same_size(frame1)) throw std::invalid_argument("derivatives: frame size mismatch");
  const int w = frame0.width, h = frame0.height;
  if (w < 3 || h < 3) throw std::invalid_argument("derivatives: frames must be at least 3x3");

  Image avg(w, h);
  for (std::size_t i = 0; i < avg.size(); ++i) avg.data[i] = 0.5 * (frame0.data[i] + frame1.data[i]);

  auto central_x = [](const Image& f) {
    Image g(f.width, f.height);
    for (int y = 0; y < f.height; ++y)
      for (int x = 0; x < f.width; ++x)
        g.at(x, y) = 0.5 * (f.at_reflect(x + 1, y) - f.at_reflect(x - 1, y));
    return g;
  };
  auto central_y = [](const Image& f) {
    Image g(f.width, f.height);
    for (int y = 0; y < f.height; ++y)
      for (int x = 0; x < f.width; ++x)
        g.at(x, y) = 0.5 * (f.at_reflect(x, y + 1) - f.at_reflect(x, y - 1));
    return g;
  };

  Derivatives d;
  d.fx = central_x(avg);
  d.fy = central_y(avg);
  d.fxy = central_y(d.fx);

  d.fxx = Image(w, h);
  d.fyy = Image(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      d.fxx.at(x, y) = avg.at_reflect(x + 1, y) - 2.0 * avg.at(x, y) + avg.at_reflect(x - 1, y);
      d.fyy.at(x, y) = avg.at_reflect(x, y + 1) - 2.0 * avg.at(x, y) + avg.at_reflect(x, y - 1);
    }

  d.ft = Image(w, h);
  for (std::size_t i = 0; i < d.ft.size(); ++i) d.ft.data[i] = frame1.data[i] - frame0.data[i];
  d.fxt = central_x(d.ft);
  d.fyt = central_y(d.ft);
  return d;
}

Image resize_bilinear(const Image& img, int new_width, int new_height) {
  Image out(new_width, new_height);
  const double sx = static_cast<double>(img.width) / new_width;
  const double sy = static_cast<double>(img.height) / new_height;
  for (int y = 0; y < new_height; ++y)
    for (int x = 0; x < new_width; ++x) {
      const double px = (x + 0.5) * sx - 0.5;
      const double py = (y + 0.5) * sy - 0.5;
      out.at(x, y) = sample_bilinear(img, px, py);
    }
  return out;
}

double sample_bilinear(const Image& img, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  const double v00 = img.at_clamp(x0, y0);
  const double v10 = img.at_clamp(x0 + 1, y0);
  const double v01 = img.at_clamp(x0, y0 + 1);
  const double v11 = img.at_clamp(x0 + 1, y0 + 1);
  return (1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11);
}

Pyramid build_pyramid(const Image& f0, const Image& f1, double scale, int min_size) {
  if (!(scale > 0.0 && scale < 1.0))
    throw std::invalid_argument("build_pyramid: scale must lie in (0, 1)");
  if (min_size < 8) throw std::invalid_argument("build_pyramid: min_size must be >= 8");
  if (!f0.same_size(f1)) throw std::invalid_argument("build_pyramid: frame size mismatch");

  Pyramid pyr;
  pyr.scale = scale;
  pyr.levels.push_back({f0, f1});

  const double aa_sigma = 0.5 * std::sqrt(1.0 / (scale * scale) - 1.0);
  while (true) {
    const Image& prev0 = pyr.levels.back().f0;
    const Image& prev1 = pyr.levels.back().f1;
    const int nw = static_cast<int>(std::lround(scale * prev0.width));
    const int nh = static_cast<int>(std::lround(scale * prev0.height));
    if (std::min(nw, nh) < min_size) break;
    PyramidLevel lvl;
    lvl.f0 = resize_bilinear(gaussian_smooth(prev0, aa_sigma), nw, nh);
    lvl.f1 = resize_bilinear(gaussian_smooth(prev1, aa_sigma), nw, nh);
    pyr.levels.push_back(std::move(lvl));
  }
  return pyr;
}

std::pair<Image, OcclusionMask> warp(const Image& img, const FlowField& flow) {
  if (!flow.same_size(img)) throw std::invalid_argument("warp: size mismatch");
  Image out(img.width, img.height);
  OcclusionMask mask(img.width, img.height, 1);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double px = x + flow.u.at(x, y);
      const double py = y + flow.v.at(x, y);
      if (px < 0.0 || px > img.width - 1.0 || py < 0.0 || py > img.height - 1.0)
        mask.at(x, y) = 0;
      out.at(x, y) = sample_bilinear(img, px, py);
    }
  return {std::move(out), std::move(mask)};
}

namespace {

double window_median(const Image& img, int cx, int cy, int radius, std::vector<double>& buf) {
  buf.clear();
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx) buf.push_back(img.at_reflect(cx + dx, cy + dy));
  auto mid = buf.begin() + buf.size() / 2;
  std::nth_element(buf.begin(), mid, buf.end());
  return *mid;
}

}  // namespace

FlowField median_filter_flow(const FlowField& flow, int radius) {
  if (radius < 1) throw std::invalid_argument("median_filter_flow: radius must be >= 1");
  FlowField out(flow.width(), flow.height());
  std::vector<double> buf;
  buf.reserve(static_cast<std::size_t>(2 * radius + 1) * (2 * radius + 1));
  for (int y = 0; y < flow.height(); ++y)
    for (int x = 0; x < flow.width(); ++x) {
      out.u.at(x, y) = window_median(flow.u, x, y, radius, buf);
      out.v.at(x, y) = window_median(flow.v, x, y, radius, buf);
    }
  return out;
}

OcclusionMask detect_occlusions(const FlowField& flow_fwd, const FlowField& flow_bwd,
                                double threshold) {
  if (!flow_fwd.same_size(flow_bwd)) throw std::invalid_argument("detect_occlusions: size mismatch");
  const int w = flow_fwd.width(), h = flow_fwd.height();
  OcclusionMask mask(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double u = flow_fwd.u.at(x, y);
      const double v = flow_fwd.v.at(x, y);
      const double tx = x + u, ty = y + v;
      if (tx < 0.0 || tx > w - 1.0 || ty < 0.0 || ty > h - 1.0) {
        mask.at(x, y) = 0;
        continue;
      }
      const double bu = sample_bilinear(flow_bwd.u, tx, ty);
      const double bv = sample_bilinear(flow_bwd.v, tx, ty);
      if (std::hypot(u + bu, v + bv) > threshold) mask.at(x, y) = 0;
    }
  return mask;
}

FlowField upsample_flow(const FlowField& flow, int new_width, int new_height) {
  FlowField out;
  out.u = resize_bilinear(flow.u, new_width, new_height);
  out.v = resize_bilinear(flow.v, new_width, new_height);
  const double rx = static_cast<double>(new_width) / flow.width();
  const double ry = static_cast<double>(new_height) / flow.height();
  for (auto& val : out.u.data) val *= rx;
  for (auto& val : out.v.data) val *= ry;
  return out;
}

}  // namespace bregflow
