#include "bregflow/linear_system.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace bregflow {

FlowField apply_uv_operator(const MotionTensor& tensor, double theta, const FlowField& x) {
  const int w = tensor.width, h = tensor.height;
  if (!tensor.same_size(x.u)) throw std::invalid_argument("apply_uv_operator: size mismatch");
  FlowField y(w, h);
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i) {
      double su = 0.0, sv = 0.0;
      int n = 0;
      if (i > 0) { su += x.u.at(i - 1, j); sv += x.v.at(i - 1, j); ++n; }
      if (i < w - 1) { su += x.u.at(i + 1, j); sv += x.v.at(i + 1, j); ++n; }
      if (j > 0) { su += x.u.at(i, j - 1); sv += x.v.at(i, j - 1); ++n; }
      if (j < h - 1) { su += x.u.at(i, j + 1); sv += x.v.at(i, j + 1); ++n; }
      const double ui = x.u.at(i, j), vi = x.v.at(i, j);
      y.u.at(i, j) = tensor.j11.at(i, j) * ui + tensor.j12.at(i, j) * vi + theta * (n * ui - su);
      y.v.at(i, j) = tensor.j12.at(i, j) * ui + tensor.j22.at(i, j) * vi + theta * (n * vi - sv);
    }
  return y;
}

namespace {

inline void relax_pixel(const MotionTensor& tensor, const Image& rhs_u, const Image& rhs_v,
                        double theta, FlowField& x, int i, int j) {
  const int w = tensor.width, h = tensor.height;
  double su = 0.0, sv = 0.0;
  int n = 0;
  if (i > 0) { su += x.u.at(i - 1, j); sv += x.v.at(i - 1, j); ++n; }
  if (i < w - 1) { su += x.u.at(i + 1, j); sv += x.v.at(i + 1, j); ++n; }
  if (j > 0) { su += x.u.at(i, j - 1); sv += x.v.at(i, j - 1); ++n; }
  if (j < h - 1) { su += x.u.at(i, j + 1); sv += x.v.at(i, j + 1); ++n; }

  const double a11 = tensor.j11.at(i, j) + theta * n;
  const double a12 = tensor.j12.at(i, j);
  const double a22 = tensor.j22.at(i, j) + theta * n;
  const double r1 = rhs_u.at(i, j) + theta * su;
  const double r2 = rhs_v.at(i, j) + theta * sv;
  const double det = a11 * a22 - a12 * a12;
  if (!(det > 0.0)) throw std::runtime_error("solve_uv_system: singular local block");
  x.u.at(i, j) = (a22 * r1 - a12 * r2) / det;
  x.v.at(i, j) = (a11 * r2 - a12 * r1) / det;
}

}  // namespace

FlowField solve_uv_system(const MotionTensor& tensor, const Image& rhs_u, const Image& rhs_v,
                          double theta, FlowField init, int sweeps, SweepOrder order) {
  if (!(theta > 0.0)) throw std::invalid_argument("solve_uv_system: theta must be positive");
  if (!tensor.same_size(rhs_u) || !tensor.same_size(rhs_v) || !tensor.same_size(init.u))
    throw std::invalid_argument("solve_uv_system: size mismatch");

  const int w = tensor.width, h = tensor.height;
  for (int s = 0; s < sweeps; ++s) {
    if (order == SweepOrder::Raster) {
      for (int j = 0; j < h; ++j)
        for (int i = 0; i < w; ++i) relax_pixel(tensor, rhs_u, rhs_v, theta, init, i, j);
    } else {
      for (int color = 0; color < 2; ++color)
        for (int j = 0; j < h; ++j)
          for (int i = (j + color) % 2; i < w; i += 2)
            relax_pixel(tensor, rhs_u, rhs_v, theta, init, i, j);
    }
  }
  return init;
}

double quadratic_form(const MotionTensor& tensor, double theta, const FlowField& x) {
  const int w = tensor.width, h = tensor.height;
  double q = 0.0;
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i) {
      const double u = x.u.at(i, j), v = x.v.at(i, j);
      q += tensor.j11.at(i, j) * u * u + 2.0 * tensor.j12.at(i, j) * u * v +
           tensor.j22.at(i, j) * v * v;
      if (i < w - 1) {
        const double du = u - x.u.at(i + 1, j), dv = v - x.v.at(i + 1, j);
        q += theta * (du * du + dv * dv);
      }
      if (j < h - 1) {
        const double du = u - x.u.at(i, j + 1), dv = v - x.v.at(i, j + 1);
        q += theta * (du * du + dv * dv);
      }
    }
  return q;
}

SpdReport spd_check(const MotionTensor& tensor, double theta, int trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("spd_check: trials must be >= 1");
  const int w = tensor.width, h = tensor.height;

  SpdReport rep;
  rep.trials = trials;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  double min_form = std::numeric_limits<double>::infinity();
  FlowField probe(w, h);
  for (int t = 0; t < trials; ++t) {
    double norm = 0.0;
    do {
      for (auto& val : probe.u.data) val = dist(rng);
      for (auto& val : probe.v.data) val = dist(rng);
      norm = 0.0;
      for (auto val : probe.u.data) norm += val * val;
      for (auto val : probe.v.data) norm += val * val;
    } while (norm == 0.0);
    min_form = std::min(min_form, quadratic_form(tensor, theta, probe));
  }
  rep.min_random_form = min_form;

  // Planar image: second derivatives vanish and the gradient is constant.
  // Judged on interior samples; boundary stencils halve the slope of a
  // sampled plane and would mask the degeneracy.
  double curvature = 0.0;
  double gx = 0.0, gy = 0.0;
  std::size_t interior = 0;
  const int x0 = w > 2 ? 1 : 0, x1 = w > 2 ? w - 1 : w;
  const int y0 = h > 2 ? 1 : 0, y1 = h > 2 ? h - 1 : h;
  for (int j = y0; j < y1; ++j)
    for (int i = x0; i < x1; ++i) {
      curvature = std::max({curvature, std::abs(tensor.fxx.at(i, j)),
                            std::abs(tensor.fxy.at(i, j)), std::abs(tensor.fyy.at(i, j))});
      gx += tensor.fx.at(i, j);
      gy += tensor.fy.at(i, j);
      ++interior;
    }
  gx /= static_cast<double>(interior);
  gy /= static_cast<double>(interior);
  double grad_spread = 0.0;
  for (int j = y0; j < y1; ++j)
    for (int i = x0; i < x1; ++i)
      grad_spread = std::max({grad_spread, std::abs(tensor.fx.at(i, j) - gx),
                              std::abs(tensor.fy.at(i, j) - gy)});
  const double scale = 1.0 + std::max(std::abs(gx), std::abs(gy));
  rep.planar_degenerate = curvature <= 1e-9 * scale && grad_spread <= 1e-9 * scale;

  // Adversarial witness: the constant field orthogonal to the mean gradient.
  // On a planar image the quadratic form vanishes there exactly.
  double wu = -gy, wv = gx;
  const double wn = std::hypot(wu, wv);
  if (wn > 0.0) {
    wu /= wn;
    wv /= wn;
  } else {
    wu = 1.0;
    wv = 0.0;
  }
  rep.witness_u = wu;
  rep.witness_v = wv;
  FlowField witness(w, h, wu, wv);
  rep.constant_witness_form = quadratic_form(tensor, theta, witness);
  return rep;
}

std::string SpdReport::summary() const {
  std::ostringstream os;
  os << "min quadratic form over " << trials << " random probes: " << min_random_form << "\n";
  os << "constant witness (" << witness_u << ", " << witness_v
     << ") form: " << constant_witness_form << "\n";
  os << "planar degenerate case: " << (planar_degenerate ? "yes" : "no") << "\n";
  return os.str();
}

}  // namespace bregflow
