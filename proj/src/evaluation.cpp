#include "bregflow/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bregflow {

namespace {

constexpr double kPi = 3.14159265358979323846;

template <typename PerPixel>
std::size_t for_valid_pixels(const FlowField& estimated, const FlowField& truth,
                             const OcclusionMask* valid, PerPixel&& fn) {
  if (!estimated.same_size(truth))
    throw std::invalid_argument("flow evaluation: field size mismatch");
  if (valid && (valid->width != estimated.width() || valid->height != estimated.height()))
    throw std::invalid_argument("flow evaluation: mask size mismatch");
  std::size_t n = 0;
  for (int y = 0; y < estimated.height(); ++y)
    for (int x = 0; x < estimated.width(); ++x) {
      if (valid && valid->at(x, y) == 0) continue;
      const double ue = estimated.u.at(x, y), ve = estimated.v.at(x, y);
      const double uc = truth.u.at(x, y), vc = truth.v.at(x, y);
      if (is_unknown_flow(ue, ve) || is_unknown_flow(uc, vc)) continue;
      fn(ue, ve, uc, vc);
      ++n;
    }
  if (n == 0) throw std::invalid_argument("flow evaluation: no valid pixels");
  return n;
}

}  // namespace

double aae_degrees(const FlowField& estimated, const FlowField& truth, const OcclusionMask* valid) {
  double sum = 0.0;
  const std::size_t n =
      for_valid_pixels(estimated, truth, valid, [&](double ue, double ve, double uc, double vc) {
        const double num = uc * ue + vc * ve + 1.0;
        const double den = std::sqrt((uc * uc + vc * vc + 1.0) * (ue * ue + ve * ve + 1.0));
        sum += std::acos(std::clamp(num / den, -1.0, 1.0));
      });
  return sum / static_cast<double>(n) * 180.0 / kPi;
}

double aee_pixels(const FlowField& estimated, const FlowField& truth, const OcclusionMask* valid) {
  double sum = 0.0;
  const std::size_t n =
      for_valid_pixels(estimated, truth, valid, [&](double ue, double ve, double uc, double vc) {
        sum += std::hypot(uc - ue, vc - ve);
      });
  return sum / static_cast<double>(n);
}

ErrorReport evaluate_flow(const FlowField& estimated, const FlowField& truth,
                          const OcclusionMask* valid) {
  ErrorReport rep;
  rep.aae = aae_degrees(estimated, truth, valid);
  rep.aee = aee_pixels(estimated, truth, valid);
  for_valid_pixels(estimated, truth, valid, [&](double, double, double, double) { ++rep.n_pixels; });
  return rep;
}

namespace {

// 55-segment flow color wheel (RY, YG, GC, CB, BM, MR transitions).
struct ColorWheel {
  static constexpr int RY = 15, YG = 6, GC = 4, CB = 11, BM = 13, MR = 6;
  static constexpr int ncols = RY + YG + GC + CB + BM + MR;
  std::array<std::array<double, 3>, ncols> colors{};

  ColorWheel() {
    int k = 0;
    auto span = [&](int n, int from, int to, bool up) {
      for (int i = 0; i < n; ++i, ++k) {
        colors[k] = {255.0, 255.0, 255.0};
        colors[k][from] = 255.0;
        colors[k][to] = up ? 255.0 * i / n : 255.0 - 255.0 * i / n;
        for (int c = 0; c < 3; ++c)
          if (c != from && c != to) colors[k][c] = 0.0;
      }
    };
    span(RY, 0, 1, true);    // red -> yellow
    span(YG, 1, 0, false);   // yellow -> green
    span(GC, 1, 2, true);    // green -> cyan
    span(CB, 2, 1, false);   // cyan -> blue
    span(BM, 2, 0, true);    // blue -> magenta
    span(MR, 0, 2, false);   // magenta -> red
  }
};

const ColorWheel& wheel() {
  static const ColorWheel w;
  return w;
}

}  // namespace

std::array<std::uint8_t, 3> flow_wheel_color(double angle_rad, double rad) {
  rad = std::clamp(rad, 0.0, 1.0);
  const auto& w = wheel();
  const double a = angle_rad / kPi;  // [-1, 1]
  const double fk = (a + 1.0) / 2.0 * (ColorWheel::ncols - 1);
  const int k0 = static_cast<int>(std::floor(fk)) % ColorWheel::ncols;
  const int k1 = (k0 + 1) % ColorWheel::ncols;
  const double f = fk - std::floor(fk);
  std::array<std::uint8_t, 3> out{};
  for (int c = 0; c < 3; ++c) {
    double col = ((1.0 - f) * w.colors[k0][c] + f * w.colors[k1][c]) / 255.0;
    col = 1.0 - rad * (1.0 - col);  // zero magnitude -> white
    out[c] = static_cast<std::uint8_t>(std::lround(255.0 * col));
  }
  return out;
}

RgbImage colorize_flow(const FlowField& flow, double max_magnitude) {
  const int w = flow.width(), h = flow.height();
  double maxrad = max_magnitude;
  if (maxrad <= 0.0) {
    std::vector<double> mags;
    mags.reserve(flow.u.size());
    for (std::size_t i = 0; i < flow.u.size(); ++i) {
      const double u = flow.u.data[i], v = flow.v.data[i];
      if (!is_unknown_flow(u, v)) mags.push_back(std::hypot(u, v));
    }
    if (!mags.empty()) {
      const std::size_t idx = static_cast<std::size_t>(0.99 * (mags.size() - 1));
      std::nth_element(mags.begin(), mags.begin() + idx, mags.end());
      maxrad = mags[idx];
    }
    if (maxrad <= 0.0) maxrad = 1.0;
  }

  RgbImage out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double u = flow.u.at(x, y), v = flow.v.at(x, y);
      auto* px = out.pixel(x, y);
      if (is_unknown_flow(u, v)) {
        px[0] = px[1] = px[2] = 0;
        continue;
      }
      const auto rgb = flow_wheel_color(std::atan2(-v, -u), std::hypot(u, v) / maxrad);
      px[0] = rgb[0];
      px[1] = rgb[1];
      px[2] = rgb[2];
    }
  return out;
}

}  // namespace bregflow
