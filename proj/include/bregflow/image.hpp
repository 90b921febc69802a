#pragma once

#include <cstddef>
#include <vector>

namespace bregflow {

// Single-channel scalar field on a regular pixel grid (h = 1), row-major.
// Also used for the individual components of a flow field.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

  std::size_t size() const { return data.size(); }
  bool same_size(const Image& o) const { return width == o.width && height == o.height; }

  // Whole-sample reflection: ... c b a | a b c ... | c b a ...
  // Keeps normalized symmetric kernels mass-preserving (Neumann boundary).
  static int reflect(int i, int n) {
    while (i < 0 || i >= n) {
      if (i < 0) i = -i - 1;
      if (i >= n) i = 2 * n - i - 1;
    }
    return i;
  }

  double at_reflect(int x, int y) const { return at(reflect(x, width), reflect(y, height)); }

  // Clamped (nearest boundary value) access.
  double at_clamp(int x, int y) const {
    if (x < 0) x = 0;
    if (x >= width) x = width - 1;
    if (y < 0) y = 0;
    if (y >= height) y = height - 1;
    return at(x, y);
  }

  void fill(double v) { data.assign(data.size(), v); }
};

struct FlowField {
  Image u, v;

  FlowField() = default;
  FlowField(int w, int h, double fu = 0.0, double fv = 0.0) : u(w, h, fu), v(w, h, fv) {}

  int width() const { return u.width; }
  int height() const { return u.height; }
  bool same_size(const FlowField& o) const { return u.same_size(o.u); }
  bool same_size(const Image& img) const { return u.same_size(img); }
};

}  // namespace bregflow
