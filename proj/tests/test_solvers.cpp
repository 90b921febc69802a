#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "bregflow/evaluation.hpp"
#include "bregflow/solvers.hpp"
#include "test_util.hpp"

using namespace bregflow;

namespace {

Image func_image(int w, int h, const std::function<double(double, double)>& fn) {
  Image img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.at(x, y) = fn(x, y);
  return img;
}

// Smooth non-planar texture in the usual grey-value range.
double texture(double x, double y) {
  return 128.0 + 60.0 * std::sin(0.35 * x + 1.0) * std::sin(0.30 * y + 0.5) +
         40.0 * std::sin(0.10 * (x + y));
}

double mean(const Image& img) {
  double s = 0.0;
  for (double v : img.data) s += v;
  return s / static_cast<double>(img.size());
}

double mean_abs(const Image& img) {
  double s = 0.0;
  for (double v : img.data) s += std::abs(v);
  return s / static_cast<double>(img.size());
}

Derivatives random_derivs(int w, int h, std::mt19937& rng, double amp = 1.0) {
  std::uniform_real_distribution<double> dist(-amp, amp);
  Derivatives d;
  for (Image* img : {&d.fx, &d.fy, &d.fxx, &d.fxy, &d.fyy, &d.ft, &d.fxt, &d.fyt}) {
    *img = Image(w, h);
    for (auto& v : img->data) v = dist(rng);
  }
  return d;
}

}  // namespace

TEST_CASE("identical frames give an exactly zero flow") {
  const Image f = func_image(48, 40, texture);
  SolverParams params;
  params.lambda = 0.05;
  params.mu = 5.0;
  params.sigma = 0.5;
  params.bregman_iters = 5;
  params.sweeps = 2;
  params.gs_iters = 5;
  params.pyramid_min_size = 16;

  for (FlowModel model : {FlowModel::Osb, FlowModel::Brox, FlowModel::HornSchunck}) {
    const FlowField flow = compute_flow(f, f, model, params);
    for (double v : flow.u.data) CHECK(v == 0.0);
    for (double v : flow.v.data) CHECK(v == 0.0);
  }
}

TEST_CASE("identical frames are a fixed point of the level solvers") {
  const Image f = func_image(24, 24, texture);
  const Derivatives d = derivatives(f, f);
  const MotionTensor t = assemble_motion_tensor(d, 1.0);
  SolverParams params;
  params.lambda = 1.0;
  params.mu = 2.0;
  params.gamma = 1.0;
  params.bregman_iters = 4;
  params.sweeps = 2;
  params.gs_iters = 5;

  for (auto solver : {solve_osb_level, solve_brox_level}) {
    const LevelResult res = solver(t, params, FlowField(24, 24));
    for (double v : res.flow.u.data) CHECK(v == 0.0);
    for (double v : res.flow.v.data) CHECK(v == 0.0);
    for (const auto& rec : res.trace.records) CHECK(rec.h == 0.0);
  }
}

TEST_CASE("osb level solver recovers a unit translation on a quadratic image") {
  // Quadratic image: the linearized constancy equations are exact for a 1 px shift.
  const int n = 32;
  const auto quad = [&](double x, double y) {
    const double cx = x - n / 2.0, cy = y - n / 2.0;
    return 0.05 * cx * cx + 0.08 * cy * cy + 0.03 * cx * cy + 2.0 * cx + 1.0 * cy;
  };
  const Image f0 = func_image(n, n, quad);
  const Image f1 = func_image(n, n, [&](double x, double y) { return quad(x - 1.0, y); });

  const Derivatives d = derivatives(f0, f1);
  const MotionTensor t = assemble_motion_tensor(d, 0.0);

  SolverParams params;
  params.lambda = 20.0;  // strong data term
  params.mu = 20.0;
  params.gamma = 0.0;
  params.bregman_iters = 60;
  params.sweeps = 2;
  params.gs_iters = 20;

  const LevelResult res = solve_osb_level(t, params, FlowField(n, n));
  CHECK(mean(res.flow.u) > 0.8);
  CHECK(mean(res.flow.u) < 1.2);
  CHECK(mean_abs(res.flow.v) <= 0.1);
}

TEST_CASE("smoothness-constraint residual decreases over outer iterations") {
  std::mt19937 rng(41);
  SolverParams params;
  params.lambda = 1.0;
  params.mu = 2.0;
  params.gamma = 0.5;
  params.bregman_iters = 15;
  params.sweeps = 2;
  params.gs_iters = 10;

  for (int instance = 0; instance < 4; ++instance) {
    const Derivatives d = random_derivs(10, 10, rng, 1.0);
    const MotionTensor t = assemble_motion_tensor(d, params.gamma);
    SUBCASE("") {}
    const LevelResult osb = solve_osb_level(t, params, FlowField(10, 10));
    REQUIRE(osb.trace.size() == 16);
    CHECK(osb.trace.back().h <= osb.trace.records[1].h + 1e-9);

    const LevelResult brox = solve_brox_level(t, params, FlowField(10, 10));
    CHECK(brox.trace.back().h <= brox.trace.records[1].h + 1e-9);
  }
}

TEST_CASE("horn-schunck baseline") {
  SUBCASE("zero temporal derivative gives zero flow") {
    const Image f = func_image(16, 16, texture);
    const Derivatives d = derivatives(f, f);
    const MotionTensor t = assemble_motion_tensor(d, 0.0);
    const FlowField flow = solve_horn_schunck(t, 1.0, 100);
    for (double v : flow.u.data) CHECK(v == 0.0);
    for (double v : flow.v.data) CHECK(v == 0.0);
  }
  SUBCASE("matches a dense direct solve on a tiny instance") {
    std::mt19937 rng(42);
    const int w = 4, h = 4;
    const Derivatives d = random_derivs(w, h, rng, 1.0);
    const MotionTensor t = assemble_motion_tensor(d, 0.0);
    const double alpha = 0.8;
    const FlowField sol = solve_horn_schunck(t, alpha, 600);

    const std::size_t np = static_cast<std::size_t>(w) * h;
    std::vector<double> a(4 * np * np, 0.0);
    std::vector<double> rhs(2 * np);
    const std::size_t nn = 2 * np;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        int cnt = 0;
        const int dx[] = {-1, 1, 0, 0}, dy[] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
          const int qx = x + dx[k], qy = y + dy[k];
          if (qx < 0 || qx >= w || qy < 0 || qy >= h) continue;
          ++cnt;
          const std::size_t q = static_cast<std::size_t>(qy) * w + qx;
          a[(2 * p) * nn + 2 * q] -= alpha;
          a[(2 * p + 1) * nn + 2 * q + 1] -= alpha;
        }
        a[(2 * p) * nn + 2 * p] = t.j11.at(x, y) + alpha * cnt;
        a[(2 * p) * nn + 2 * p + 1] = t.j12.at(x, y);
        a[(2 * p + 1) * nn + 2 * p] = t.j12.at(x, y);
        a[(2 * p + 1) * nn + 2 * p + 1] = t.j22.at(x, y) + alpha * cnt;
        rhs[2 * p] = -t.b1.at(x, y);
        rhs[2 * p + 1] = -t.b2.at(x, y);
      }
    const auto dense = testutil::gauss_solve(a, rhs);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        CHECK(std::abs(sol.u.at(x, y) - (dense[2 * p])) <= 1e-8);
        CHECK(std::abs(sol.v.at(x, y) - (dense[2 * p + 1])) <= 1e-8);
      }
  }
  SUBCASE("recovers a translation within 20 percent") {
    const int n = 64;
    const Image f0 = func_image(n, n, texture);
    const Image f1 = func_image(n, n, [](double x, double y) { return texture(x - 1.0, y); });
    SolverParams params;
    params.lambda = 1.0;
    params.mu = 50.0;  // alpha = mu / lambda
    params.sigma = 0.5;
    params.bregman_iters = 30;
    params.gs_iters = 10;
    const FlowField flow = compute_flow(f0, f1, FlowModel::HornSchunck, params);
    CHECK(mean(flow.u) == doctest::Approx(1.0).epsilon(0.2));
    CHECK(mean_abs(flow.v) < 0.2);
  }
}

TEST_CASE("full pipeline recovers translations") {
  const int n = 64;
  const Image f0 = func_image(n, n, texture);
  const Image f1 = func_image(n, n, [](double x, double y) { return texture(x - 1.0, y); });

  SolverParams params;
  params.lambda = 0.05;
  params.mu = 10.0;
  params.gamma = 0.0;
  params.sigma = 0.5;
  params.bregman_iters = 20;
  params.sweeps = 2;
  params.gs_iters = 10;
  params.pyramid_min_size = 16;

  const FlowField flow = compute_flow(f0, f1, FlowModel::Osb, params);
  CHECK(mean(flow.u) == doctest::Approx(1.0).epsilon(0.15));
  CHECK(mean_abs(flow.v) < 0.15);
}

TEST_CASE("pyramid is required for large displacements") {
  const int n = 96;
  // several octaves: the fine detail breaks the single-level linearization at
  // 5 px while the coarse waves keep the pyramid on track
  const auto wide = [](double x, double y) {
    return 128.0 + 40.0 * std::sin(0.40 * x + 1.1) * std::sin(0.37 * y + 0.6) +
           35.0 * std::sin(0.18 * x - 0.2) * std::sin(0.16 * y + 0.9) +
           30.0 * std::sin(0.08 * x + 0.07 * y) +
           25.0 * std::sin(0.035 * x - 0.3) * std::sin(0.03 * y + 0.4);
  };
  const Image f0 = func_image(n, n, wide);
  const Image f1 = func_image(n, n, [&](double x, double y) { return wide(x - 5.0, y); });

  SolverParams params;
  params.lambda = 0.05;
  params.mu = 10.0;
  params.sigma = 0.5;
  params.bregman_iters = 20;
  params.sweeps = 2;
  params.gs_iters = 10;

  SolverParams single = params;
  single.pyramid_min_size = 90;  // first coarse level would fall below this
  const FlowField flat = compute_flow(f0, f1, FlowModel::Osb, single);
  CHECK(std::abs(mean(flat.u) - 5.0) > 1.0);

  params.pyramid_min_size = 16;
  const FlowField pyr = compute_flow(f0, f1, FlowModel::Osb, params);
  CHECK(std::abs(mean(pyr.u) - 5.0) < 0.5);
}

TEST_CASE("robust data term wins under impulse noise") {
  const int n = 64;
  const Image clean0 = func_image(n, n, texture);
  const Image clean1 = func_image(n, n, [](double x, double y) { return texture(x - 1.0, y); });

  std::mt19937 rng(43);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  Image f0 = clean0, f1 = clean1;
  for (auto* img : {&f0, &f1})
    for (auto& v : img->data)
      if (coin(rng) < 0.10) v = coin(rng) < 0.5 ? 0.0 : 255.0;

  const FlowField truth(n, n, 1.0, 0.0);

  SolverParams osb;
  osb.lambda = 0.05;
  osb.mu = 10.0;
  osb.sigma = 0.8;
  osb.bregman_iters = 20;
  osb.sweeps = 2;
  osb.gs_iters = 10;
  osb.pyramid_min_size = 16;

  SolverParams brox = osb;
  brox.lambda = 0.05;
  brox.mu = 0.5;
  brox.bregman_iters = 60;

  const FlowField flow_osb = compute_flow(f0, f1, FlowModel::Osb, osb);
  const FlowField flow_brox = compute_flow(f0, f1, FlowModel::Brox, brox);
  const double aee_osb = aee_pixels(flow_osb, truth);
  const double aee_brox = aee_pixels(flow_brox, truth);
  CHECK(aee_brox <= aee_osb);
}

TEST_CASE("grey-offset invariance of the flow") {
  const int n = 48;
  Image f0 = func_image(n, n, texture);
  Image f1 = func_image(n, n, [](double x, double y) { return texture(x - 1.0, y); });
  // integer samples so the offset arithmetic is exact in doubles
  for (auto* img : {&f0, &f1})
    for (auto& v : img->data) v = std::floor(v);

  SolverParams params;
  params.lambda = 0.05;
  params.mu = 10.0;
  params.sigma = 0.0;
  params.bregman_iters = 10;
  params.sweeps = 2;
  params.gs_iters = 10;
  params.pyramid_min_size = 48;  // single level: every arithmetic step stays exact

  Image g0 = f0, g1 = f1;
  for (auto& v : g0.data) v += 64.0;
  for (auto& v : g1.data) v += 64.0;

  const FlowField a = compute_flow(f0, f1, FlowModel::Osb, params);
  const FlowField b = compute_flow(g0, g1, FlowModel::Osb, params);
  CHECK(a.u.data == b.u.data);  // bit-for-bit
  CHECK(a.v.data == b.v.data);

  // through the full pyramid the resampling arithmetic differs in the last
  // ulps only
  params.pyramid_min_size = 16;
  params.sigma = 0.5;
  const FlowField c = compute_flow(f0, f1, FlowModel::Osb, params);
  const FlowField d = compute_flow(g0, g1, FlowModel::Osb, params);
  for (std::size_t i = 0; i < c.u.size(); ++i) {
    CHECK(std::abs(c.u.data[i] - (d.u.data[i])) <= 1e-9);
    CHECK(std::abs(c.v.data[i] - (d.v.data[i])) <= 1e-9);
  }
}

TEST_CASE("frame swap roughly negates the flow") {
  const int n = 64;
  const Image f0 = func_image(n, n, texture);
  const Image f1 = func_image(n, n, [](double x, double y) { return texture(x - 1.0, y); });

  SolverParams params;
  params.lambda = 0.05;
  params.mu = 10.0;
  params.sigma = 0.5;
  params.bregman_iters = 15;
  params.sweeps = 2;
  params.gs_iters = 10;
  params.pyramid_min_size = 16;

  const FlowField fwd = compute_flow(f0, f1, FlowModel::Osb, params);
  FlowField bwd = compute_flow(f1, f0, FlowModel::Osb, params);
  for (auto& v : bwd.u.data) v = -v;
  for (auto& v : bwd.v.data) v = -v;
  CHECK(aee_pixels(bwd, fwd) < 0.5);
}

TEST_CASE("occlusion handling masks the data term without breaking clean pairs") {
  const int n = 48;
  const Image f0 = func_image(n, n, texture);
  const Image f1 = func_image(n, n, [](double x, double y) { return texture(x - 1.0, y); });

  SolverParams params;
  params.lambda = 0.05;
  params.mu = 10.0;
  params.sigma = 0.5;
  params.bregman_iters = 10;
  params.sweeps = 2;
  params.gs_iters = 10;
  params.pyramid_min_size = 16;
  params.occlusion_on = true;

  const FlowField flow = compute_flow(f0, f1, FlowModel::Osb, params);
  CHECK(mean(flow.u) == doctest::Approx(1.0).epsilon(0.25));
}

TEST_CASE("parameter validation") {
  SolverParams params;
  params.lambda = 0.0;
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
  params = SolverParams{};
  params.pyramid_scale = 1.0;
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
  params = SolverParams{};
  params.bregman_iters = 0;
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
  CHECK_THROWS_AS(compute_flow(Image(8, 8), Image(9, 8), FlowModel::Osb, SolverParams{}),
                  std::invalid_argument);
}
