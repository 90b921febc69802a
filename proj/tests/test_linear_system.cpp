#include <doctest.h>

#include <cmath>
#include <random>

#include "bregflow/linear_system.hpp"
#include "bregflow/motion_tensor.hpp"
#include "test_util.hpp"

using namespace bregflow;

namespace {

Image func_image(int w, int h, const std::function<double(int, int)>& fn) {
  Image img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.at(x, y) = fn(x, y);
  return img;
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

FlowField random_flow(int w, int h, std::mt19937& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  FlowField f(w, h);
  for (auto& v : f.u.data) v = dist(rng);
  for (auto& v : f.v.data) v = dist(rng);
  return f;
}

double flow_dot(const FlowField& a, const FlowField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.u.size(); ++i)
    s += a.u.data[i] * b.u.data[i] + a.v.data[i] * b.v.data[i];
  return s;
}

// Independent dense assembly of the stencil system, unknowns ordered
// (u_0, v_0, u_1, v_1, ...).
std::vector<double> dense_system(const MotionTensor& t, double theta) {
  const int w = t.width, h = t.height;
  const std::size_t n = 2 * static_cast<std::size_t>(w) * h;
  std::vector<double> a(n * n, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      int nn = 0;
      const int dx[] = {-1, 1, 0, 0}, dy[] = {0, 0, -1, 1};
      for (int k = 0; k < 4; ++k) {
        const int qx = x + dx[k], qy = y + dy[k];
        if (qx < 0 || qx >= w || qy < 0 || qy >= h) continue;
        ++nn;
        const std::size_t q = static_cast<std::size_t>(qy) * w + qx;
        a[(2 * p) * n + 2 * q] -= theta;
        a[(2 * p + 1) * n + 2 * q + 1] -= theta;
      }
      a[(2 * p) * n + 2 * p] += t.j11.at(x, y) + theta * nn;
      a[(2 * p) * n + 2 * p + 1] += t.j12.at(x, y);
      a[(2 * p + 1) * n + 2 * p] += t.j12.at(x, y);
      a[(2 * p + 1) * n + 2 * p + 1] += t.j22.at(x, y) + theta * nn;
    }
  return a;
}

}  // namespace

TEST_CASE("motion tensor entries and PSD property") {
  std::mt19937 rng(31);
  SUBCASE("pure x gradient") {
    Derivatives d = random_derivs(3, 3, rng, 0.0);
    d.fx.fill(1.0);
    const MotionTensor t = assemble_motion_tensor(d, 0.0);
    CHECK(t.j11.at(1, 1) == doctest::Approx(1.0));
    CHECK(t.j12.at(1, 1) == doctest::Approx(0.0));
    CHECK(t.j22.at(1, 1) == doctest::Approx(0.0));
  }
  SUBCASE("diagonal gradient gives the rank-one tensor") {
    Derivatives d = random_derivs(3, 3, rng, 0.0);
    d.fx.fill(1.0);
    d.fy.fill(1.0);
    const MotionTensor t = assemble_motion_tensor(d, 0.0);
    // eigenvalues of [[1,1],[1,1]] are {0, 2}
    const double tr = t.j11.at(0, 0) + t.j22.at(0, 0);
    const double det = t.j11.at(0, 0) * t.j22.at(0, 0) - t.j12.at(0, 0) * t.j12.at(0, 0);
    const double disc = std::sqrt(tr * tr / 4.0 - det);
    CHECK(tr / 2.0 - disc == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(tr / 2.0 + disc == doctest::Approx(2.0));
  }
  SUBCASE("tensor equals G^T G with weighted constancy rows") {
    const double gamma = 2.0;
    const Derivatives d = random_derivs(6, 5, rng);
    const MotionTensor t = assemble_motion_tensor(d, gamma);
    const double sg = std::sqrt(gamma);
    for (std::size_t i = 0; i < t.j11.size(); ++i) {
      const double g0[2] = {d.fx.data[i], d.fy.data[i]};
      const double g1[2] = {sg * d.fxx.data[i], sg * d.fxy.data[i]};
      const double g2[2] = {sg * d.fxy.data[i], sg * d.fyy.data[i]};
      CHECK(t.j11.data[i] ==
            doctest::Approx(g0[0] * g0[0] + g1[0] * g1[0] + g2[0] * g2[0]).epsilon(1e-12));
      CHECK(t.j12.data[i] ==
            doctest::Approx(g0[0] * g0[1] + g1[0] * g1[1] + g2[0] * g2[1]).epsilon(1e-12));
      CHECK(t.j22.data[i] ==
            doctest::Approx(g0[1] * g0[1] + g1[1] * g1[1] + g2[1] * g2[1]).epsilon(1e-12));
    }
  }
  SUBCASE("per-pixel minimum eigenvalue is nonnegative") {
    for (int trial = 0; trial < 10; ++trial) {
      const Derivatives d = random_derivs(5, 5, rng, 3.0);
      const MotionTensor t = assemble_motion_tensor(d, 1.7);
      for (std::size_t i = 0; i < t.j11.size(); ++i) {
        const double tr = t.j11.data[i] + t.j22.data[i];
        const double det = t.j11.data[i] * t.j22.data[i] - t.j12.data[i] * t.j12.data[i];
        const double eig_min = tr / 2.0 - std::sqrt(std::max(tr * tr / 4.0 - det, 0.0));
        CHECK(eig_min >= -1e-12);
      }
    }
  }
  SUBCASE("occluded pixels are zeroed") {
    const Derivatives d = random_derivs(4, 4, rng);
    OcclusionMask mask(4, 4, 1);
    mask.at(2, 1) = 0;
    const MotionTensor t = assemble_motion_tensor(d, 1.0, &mask);
    CHECK(t.j11.at(2, 1) == 0.0);
    CHECK(t.j12.at(2, 1) == 0.0);
    CHECK(t.j22.at(2, 1) == 0.0);
    CHECK(t.b1.at(2, 1) == 0.0);
    CHECK(t.ft.at(2, 1) == 0.0);
    CHECK(t.j11.at(0, 0) != 0.0);
  }
}

TEST_CASE("stencil operator is symmetric") {
  std::mt19937 rng(32);
  const Derivatives d = random_derivs(6, 5, rng, 2.0);
  const MotionTensor t = assemble_motion_tensor(d, 0.8);
  for (int trial = 0; trial < 100; ++trial) {
    const FlowField x = random_flow(6, 5, rng);
    const FlowField y = random_flow(6, 5, rng);
    const FlowField mx = apply_uv_operator(t, 1.3, x);
    const FlowField my = apply_uv_operator(t, 1.3, y);
    CHECK(flow_dot(mx, y) == doctest::Approx(flow_dot(x, my)).epsilon(1e-10));
  }
}

TEST_CASE("edge-form quadratic form agrees with the operator form") {
  std::mt19937 rng(33);
  const Derivatives d = random_derivs(7, 6, rng, 1.5);
  const MotionTensor t = assemble_motion_tensor(d, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const FlowField x = random_flow(7, 6, rng);
    const FlowField mx = apply_uv_operator(t, 0.7, x);
    CHECK(quadratic_form(t, 0.7, x) == doctest::Approx(flow_dot(mx, x)).epsilon(1e-10));
  }
}

TEST_CASE("gauss-seidel matches a dense direct solve") {
  std::mt19937 rng(34);
  for (SweepOrder order : {SweepOrder::Raster, SweepOrder::RedBlack}) {
    const int w = 4, h = 4;
    const Derivatives d = random_derivs(w, h, rng, 1.0);
    const MotionTensor t = assemble_motion_tensor(d, 0.5);
    const double theta = 1.0;

    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Image rhs_u(w, h), rhs_v(w, h);
    for (auto& v : rhs_u.data) v = dist(rng);
    for (auto& v : rhs_v.data) v = dist(rng);

    const FlowField sol = solve_uv_system(t, rhs_u, rhs_v, theta, FlowField(w, h), 500, order);

    std::vector<double> rhs(2 * static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        rhs[2 * (static_cast<std::size_t>(y) * w + x)] = rhs_u.at(x, y);
        rhs[2 * (static_cast<std::size_t>(y) * w + x) + 1] = rhs_v.at(x, y);
      }
    const auto dense = testutil::gauss_solve(dense_system(t, theta), rhs);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        CHECK(std::abs(sol.u.at(x, y) - (dense[2 * p])) <= 1e-8);
        CHECK(std::abs(sol.v.at(x, y) - (dense[2 * p + 1])) <= 1e-8);
      }
  }
}

TEST_CASE("operator round trip recovers a known flow") {
  std::mt19937 rng(35);
  const Derivatives d = random_derivs(8, 8, rng, 1.0);
  const MotionTensor t = assemble_motion_tensor(d, 1.0);
  const FlowField truth(8, 8, 0.8, -0.4);
  const FlowField rhs = apply_uv_operator(t, 1.0, truth);
  const FlowField sol = solve_uv_system(t, rhs.u, rhs.v, 1.0, FlowField(8, 8), 400);
  for (std::size_t i = 0; i < sol.u.size(); ++i) {
    CHECK(std::abs(sol.u.data[i] - (0.8)) <= 1e-6);
    CHECK(std::abs(sol.v.data[i] - (-0.4)) <= 1e-6);
  }
}

TEST_CASE("near-diagonal system reproduces its right-hand side") {
  Derivatives d;
  for (Image* img : {&d.fx, &d.fy, &d.fxx, &d.fxy, &d.fyy, &d.ft, &d.fxt, &d.fyt}) *img = Image(5, 5);
  d.fx.fill(1.0);  // j11 = 1
  MotionTensor t = assemble_motion_tensor(d, 0.0);
  t.j22 = t.j11;   // decoupled identity blocks
  std::mt19937 rng(36);
  const FlowField rhs = random_flow(5, 5, rng);
  const FlowField sol = solve_uv_system(t, rhs.u, rhs.v, 1e-12, rhs, 50);
  for (std::size_t i = 0; i < sol.u.size(); ++i) {
    CHECK(sol.u.data[i] == doctest::Approx(rhs.u.data[i]).epsilon(1e-8));
    CHECK(sol.v.data[i] == doctest::Approx(rhs.v.data[i]).epsilon(1e-8));
  }
}

TEST_CASE("gauss-seidel residual is non-increasing on SPD instances") {
  std::mt19937 rng(37);
  const Derivatives d = random_derivs(6, 6, rng, 1.0);
  const MotionTensor t = assemble_motion_tensor(d, 0.3);
  const Image zero(6, 6, 0.0);
  FlowField x = random_flow(6, 6, rng);
  const FlowField rhs = random_flow(6, 6, rng);
  auto residual = [&](const FlowField& f) {
    const FlowField mf = apply_uv_operator(t, 0.9, f);
    double s = 0.0;
    for (std::size_t i = 0; i < mf.u.size(); ++i) {
      const double ru = mf.u.data[i] - rhs.u.data[i];
      const double rv = mf.v.data[i] - rhs.v.data[i];
      s += ru * ru + rv * rv;
    }
    return std::sqrt(s);
  };
  double prev = residual(x);
  for (int sweep = 0; sweep < 30; ++sweep) {
    x = solve_uv_system(t, rhs.u, rhs.v, 0.9, std::move(x), 1);
    const double cur = residual(x);
    CHECK(cur <= prev + 1e-12);
    prev = cur;
  }
}

TEST_CASE("spd check separates planar and curved images") {
  SUBCASE("exact plane gradient gives a zero witness") {
    // the degenerate case: constant gradient (2, -1), no curvature
    Derivatives d;
    for (Image* img : {&d.fx, &d.fy, &d.fxx, &d.fxy, &d.fyy, &d.ft, &d.fxt, &d.fyt})
      *img = Image(12, 12);
    d.fx.fill(2.0);
    d.fy.fill(-1.0);
    const MotionTensor t = assemble_motion_tensor(d, 0.0);
    const SpdReport rep = spd_check(t, 1.0, 50);
    CHECK(rep.planar_degenerate);
    CHECK(rep.constant_witness_form == 0.0);
    // the witness is the constant flow orthogonal to the gradient (2, -1)
    CHECK(rep.witness_u * 2.0 + rep.witness_v * (-1.0) == doctest::Approx(0.0).epsilon(1e-9));
  }
  SUBCASE("sampled planar image pair is flagged") {
    const Image f = func_image(12, 12, [](int x, int y) { return 2.0 * x - 1.0 * y + 5.0; });
    const Derivatives d = derivatives(f, f);
    const SpdReport rep = spd_check(assemble_motion_tensor(d, 0.0), 1.0, 50);
    CHECK(rep.planar_degenerate);
    // boundary stencils keep the sampled system only approximately degenerate
    CHECK(rep.constant_witness_form >= 0.0);
  }
  SUBCASE("curved image yields a strictly positive form") {
    const Image f =
        func_image(12, 12, [](int x, int y) { return 0.5 * x * x + 0.5 * y * y + x - 2.0 * y; });
    const Derivatives d = derivatives(f, f);
    const MotionTensor t = assemble_motion_tensor(d, 0.0);
    const SpdReport rep = spd_check(t, 0.5, 1000);
    CHECK_FALSE(rep.planar_degenerate);
    CHECK(rep.min_random_form > 0.0);
    CHECK(rep.constant_witness_form > 0.0);
  }
  SUBCASE("zero field evaluates to zero") {
    const Image f = func_image(8, 8, [](int x, int y) { return double(x * x + y); });
    const Derivatives d = derivatives(f, f);
    const MotionTensor t = assemble_motion_tensor(d, 1.0);
    CHECK(quadratic_form(t, 1.0, FlowField(8, 8)) == 0.0);
  }
}

TEST_CASE("solver input validation") {
  const Image zero(4, 4, 0.0);
  Derivatives d;
  for (Image* img : {&d.fx, &d.fy, &d.fxx, &d.fxy, &d.fyy, &d.ft, &d.fxt, &d.fyt}) *img = zero;
  const MotionTensor t = assemble_motion_tensor(d, 0.0);
  CHECK_THROWS_AS(solve_uv_system(t, zero, zero, 0.0, FlowField(4, 4), 1), std::invalid_argument);
  CHECK_THROWS_AS(solve_uv_system(t, zero, zero, -1.0, FlowField(4, 4), 1), std::invalid_argument);
  CHECK_THROWS_AS(spd_check(t, 1.0, 0), std::invalid_argument);
}
