#include "bregflow/solvers.hpp"

#include <cmath>
#include <stdexcept>

#include "bregflow/shrinkage.hpp"

namespace bregflow {

void SolverParams::validate() const {
  if (!(lambda > 0.0)) throw std::invalid_argument("params: lambda must be positive");
  if (!(mu > 0.0)) throw std::invalid_argument("params: mu must be positive");
  if (gamma < 0.0) throw std::invalid_argument("params: gamma must be >= 0");
  if (sigma < 0.0) throw std::invalid_argument("params: sigma must be >= 0");
  if (bregman_iters < 1) throw std::invalid_argument("params: bregman_iters must be >= 1");
  if (sweeps < 1) throw std::invalid_argument("params: sweeps must be >= 1");
  if (gs_iters < 1) throw std::invalid_argument("params: gs_iters must be >= 1");
  if (!(pyramid_scale > 0.0 && pyramid_scale < 1.0))
    throw std::invalid_argument("params: pyramid_scale must lie in (0, 1)");
  if (pyramid_min_size < 8) throw std::invalid_argument("params: pyramid_min_size must be >= 8");
  if (median_radius < 0) throw std::invalid_argument("params: median_radius must be >= 0");
  if (!(occlusion_threshold > 0.0))
    throw std::invalid_argument("params: occlusion_threshold must be positive");
}

namespace {

// Forward differences with the missing forward neighbor dropped (zero row/column).
void forward_grad(const Image& f, Image& gx, Image& gy) {
  const int w = f.width, h = f.height;
  gx = Image(w, h);
  gy = Image(w, h);
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i) {
      if (i < w - 1) gx.at(i, j) = f.at(i + 1, j) - f.at(i, j);
      if (j < h - 1) gy.at(i, j) = f.at(i, j + 1) - f.at(i, j);
    }
}

// Exact negative adjoint of forward_grad (backward-difference divergence).
Image divergence(const Image& px, const Image& py) {
  const int w = px.width, h = px.height;
  Image d(w, h);
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i) {
      double s = 0.0;
      if (i < w - 1) s += px.at(i, j);
      if (i > 0) s -= px.at(i - 1, j);
      if (j < h - 1) s += py.at(i, j);
      if (j > 0) s -= py.at(i, j - 1);
      d.at(i, j) = s;
    }
  return d;
}

struct SmoothnessState {
  Image dux, duy, dvx, dvy;  // slack fields for (grad u, grad v)
  Image bux, buy, bvx, bvy;  // Bregman accumulators

  explicit SmoothnessState(int w, int h)
      : dux(w, h), duy(w, h), dvx(w, h), dvy(w, h),
        bux(w, h), buy(w, h), bvx(w, h), bvy(w, h) {}

  // Coupled d-update: per-pixel gshrink of (grad u, grad v) + b with threshold 1/mu.
  void shrink_update(const Image& gxu, const Image& gyu, const Image& gxv, const Image& gyv,
                     double mu) {
    double vec[4];
    for (std::size_t i = 0; i < dux.size(); ++i) {
      vec[0] = gxu.data[i] + bux.data[i];
      vec[1] = gyu.data[i] + buy.data[i];
      vec[2] = gxv.data[i] + bvx.data[i];
      vec[3] = gyv.data[i] + bvy.data[i];
      gshrink_inplace(vec, 4, 1.0 / mu);
      dux.data[i] = vec[0];
      duy.data[i] = vec[1];
      dvx.data[i] = vec[2];
      dvy.data[i] = vec[3];
    }
  }

  void bregman_update(const Image& gxu, const Image& gyu, const Image& gxv, const Image& gyv) {
    for (std::size_t i = 0; i < bux.size(); ++i) {
      bux.data[i] += gxu.data[i] - dux.data[i];
      buy.data[i] += gyu.data[i] - duy.data[i];
      bvx.data[i] += gxv.data[i] - dvx.data[i];
      bvy.data[i] += gyv.data[i] - dvy.data[i];
    }
  }

  double residual(const Image& gxu, const Image& gyu, const Image& gxv, const Image& gyv) const {
    double s = 0.0;
    for (std::size_t i = 0; i < dux.size(); ++i) {
      const double r0 = dux.data[i] - gxu.data[i];
      const double r1 = duy.data[i] - gyu.data[i];
      const double r2 = dvx.data[i] - gxv.data[i];
      const double r3 = dvy.data[i] - gyv.data[i];
      s += r0 * r0 + r1 * r1 + r2 * r2 + r3 * r3;
    }
    return s;
  }

  // div(b - d) for each flow component, the smoothness part of the rhs.
  void rhs_contribution(Image& ru, Image& rv, double theta) const {
    Image pu_x(bux.width, bux.height), pu_y(bux.width, bux.height);
    Image pv_x(bux.width, bux.height), pv_y(bux.width, bux.height);
    for (std::size_t i = 0; i < bux.size(); ++i) {
      pu_x.data[i] = bux.data[i] - dux.data[i];
      pu_y.data[i] = buy.data[i] - duy.data[i];
      pv_x.data[i] = bvx.data[i] - dvx.data[i];
      pv_y.data[i] = bvy.data[i] - dvy.data[i];
    }
    const Image du = divergence(pu_x, pu_y);
    const Image dv = divergence(pv_x, pv_y);
    for (std::size_t i = 0; i < ru.size(); ++i) {
      ru.data[i] += theta * du.data[i];
      rv.data[i] += theta * dv.data[i];
    }
  }
};

double tv_energy(const Image& gxu, const Image& gyu, const Image& gxv, const Image& gyv) {
  double s = 0.0;
  for (std::size_t i = 0; i < gxu.size(); ++i)
    s += std::sqrt(gxu.data[i] * gxu.data[i] + gyu.data[i] * gyu.data[i] +
                   gxv.data[i] * gxv.data[i] + gyv.data[i] * gyv.data[i]);
  return s;
}

}  // namespace

LevelResult solve_osb_level(const MotionTensor& tensor, const SolverParams& params,
                            FlowField init) {
  params.validate();
  if (!tensor.same_size(init.u)) throw std::invalid_argument("solve_osb_level: size mismatch");
  const int w = tensor.width, h = tensor.height;
  const double theta = params.mu / params.lambda;

  LevelResult res;
  res.flow = std::move(init);
  SmoothnessState s(w, h);
  Image gxu, gyu, gxv, gyv;
  forward_grad(res.flow.u, gxu, gyu);
  forward_grad(res.flow.v, gxv, gyv);

  auto energy = [&]() {
    double e = 0.0;
    for (std::size_t i = 0; i < tensor.fx.size(); ++i) {
      const double u = res.flow.u.data[i], v = res.flow.v.data[i];
      const double r = tensor.fx.data[i] * u + tensor.fy.data[i] * v + tensor.ft.data[i];
      const double rx = tensor.fxx.data[i] * u + tensor.fxy.data[i] * v + tensor.fxt.data[i];
      const double ry = tensor.fxy.data[i] * u + tensor.fyy.data[i] * v + tensor.fyt.data[i];
      e += 0.5 * params.lambda * (r * r + params.gamma * (rx * rx + ry * ry));
    }
    return e + tv_energy(gxu, gyu, gxv, gyv);
  };
  auto record = [&](int k) {
    BregmanRecord r;
    r.k = k;
    r.h = 0.5 * s.residual(gxu, gyu, gxv, gyv);
    r.cost = energy();
    res.trace.records.push_back(r);
  };

  record(0);
  Image ru(w, h), rv(w, h);
  for (int k = 0; k < params.bregman_iters; ++k) {
    for (int j = 0; j < params.sweeps; ++j) {
      for (std::size_t i = 0; i < ru.size(); ++i) {
        ru.data[i] = -tensor.b1.data[i];
        rv.data[i] = -tensor.b2.data[i];
      }
      s.rhs_contribution(ru, rv, theta);
      res.flow = solve_uv_system(tensor, ru, rv, theta, std::move(res.flow), params.gs_iters,
                                 params.gs_order);
      forward_grad(res.flow.u, gxu, gyu);
      forward_grad(res.flow.v, gxv, gyv);
      s.shrink_update(gxu, gyu, gxv, gyv, params.mu);
    }
    s.bregman_update(gxu, gyu, gxv, gyv);
    record(k + 1);
    // the zero init is not a subgradient-feasible point, so the decrease
    // property is only expected between genuine Bregman iterates
    const auto& rec = res.trace.records;
    if (k >= 1 && rec[rec.size() - 1].h > rec[rec.size() - 2].h + 1e-6)
      res.trace.warnings.push_back("smoothness-constraint residual increased at outer iteration " +
                                   std::to_string(k + 1));
  }
  return res;
}

LevelResult solve_brox_level(const MotionTensor& tensor, const SolverParams& params,
                             FlowField init) {
  params.validate();
  if (!tensor.same_size(init.u)) throw std::invalid_argument("solve_brox_level: size mismatch");
  const int w = tensor.width, h = tensor.height;
  const double theta = params.mu / 2.0;

  // Effective Gram entries for the u,v solve: all constancy rows enter the
  // quadratic coupling with unit weight, gamma only scales the l1 thresholds.
  MotionTensor eff = tensor;
  for (std::size_t i = 0; i < eff.j11.size(); ++i) {
    const double fx = tensor.fx.data[i], fy = tensor.fy.data[i];
    const double fxx = tensor.fxx.data[i], fxy = tensor.fxy.data[i], fyy = tensor.fyy.data[i];
    eff.j11.data[i] = fx * fx + fxx * fxx + fxy * fxy;
    eff.j12.data[i] = fx * fy + fxx * fxy + fxy * fyy;
    eff.j22.data[i] = fy * fy + fxy * fxy + fyy * fyy;
  }

  LevelResult res;
  res.flow = std::move(init);
  SmoothnessState s(w, h);
  Image d(w, h), dx(w, h), dy(w, h);
  Image ft_acc = tensor.ft, fxt_acc = tensor.fxt, fyt_acc = tensor.fyt;
  Image gxu, gyu, gxv, gyv;
  forward_grad(res.flow.u, gxu, gyu);
  forward_grad(res.flow.v, gxv, gyv);

  const double thr_grey = params.lambda / params.mu;
  const double thr_grad = params.lambda * params.gamma / params.mu;

  auto grey_row = [&](std::size_t i) {
    return tensor.fx.data[i] * res.flow.u.data[i] + tensor.fy.data[i] * res.flow.v.data[i];
  };
  auto gradx_row = [&](std::size_t i) {
    return tensor.fxx.data[i] * res.flow.u.data[i] + tensor.fxy.data[i] * res.flow.v.data[i];
  };
  auto grady_row = [&](std::size_t i) {
    return tensor.fxy.data[i] * res.flow.u.data[i] + tensor.fyy.data[i] * res.flow.v.data[i];
  };

  auto energy = [&]() {
    double e = 0.0;
    for (std::size_t i = 0; i < tensor.fx.size(); ++i) {
      e += params.lambda * (std::abs(grey_row(i) + tensor.ft.data[i]) +
                            params.gamma * (std::abs(gradx_row(i) + tensor.fxt.data[i]) +
                                            std::abs(grady_row(i) + tensor.fyt.data[i])));
    }
    return e + tv_energy(gxu, gyu, gxv, gyv);
  };
  auto record = [&](int k) {
    double data_res = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double r0 = d.data[i] - grey_row(i) - tensor.ft.data[i];
      const double r1 = dx.data[i] - gradx_row(i) - tensor.fxt.data[i];
      const double r2 = dy.data[i] - grady_row(i) - tensor.fyt.data[i];
      data_res += r0 * r0 + r1 * r1 + r2 * r2;
    }
    BregmanRecord r;
    r.k = k;
    r.h = 0.5 * (data_res + s.residual(gxu, gyu, gxv, gyv));
    r.cost = energy();
    res.trace.records.push_back(r);
  };

  record(0);
  Image ru(w, h), rv(w, h);
  for (int k = 0; k < params.bregman_iters; ++k) {
    for (int j = 0; j < params.sweeps; ++j) {
      for (std::size_t i = 0; i < ru.size(); ++i) {
        const double rd = d.data[i] - ft_acc.data[i];
        const double rdx = dx.data[i] - fxt_acc.data[i];
        const double rdy = dy.data[i] - fyt_acc.data[i];
        ru.data[i] = tensor.fx.data[i] * rd + tensor.fxx.data[i] * rdx + tensor.fxy.data[i] * rdy;
        rv.data[i] = tensor.fy.data[i] * rd + tensor.fxy.data[i] * rdx + tensor.fyy.data[i] * rdy;
      }
      s.rhs_contribution(ru, rv, theta);
      res.flow = solve_uv_system(eff, ru, rv, theta, std::move(res.flow), params.gs_iters,
                                 params.gs_order);
      for (std::size_t i = 0; i < d.size(); ++i) {
        d.data[i] = shrink(grey_row(i) + ft_acc.data[i], thr_grey);
        if (thr_grad > 0.0) {
          dx.data[i] = shrink(gradx_row(i) + fxt_acc.data[i], thr_grad);
          dy.data[i] = shrink(grady_row(i) + fyt_acc.data[i], thr_grad);
        } else {
          dx.data[i] = gradx_row(i) + fxt_acc.data[i];
          dy.data[i] = grady_row(i) + fyt_acc.data[i];
        }
      }
      forward_grad(res.flow.u, gxu, gyu);
      forward_grad(res.flow.v, gxv, gyv);
      s.shrink_update(gxu, gyu, gxv, gyv, params.mu);
    }
    for (std::size_t i = 0; i < d.size(); ++i) {
      ft_acc.data[i] += tensor.ft.data[i] - d.data[i] + grey_row(i);
      fxt_acc.data[i] += tensor.fxt.data[i] - dx.data[i] + gradx_row(i);
      fyt_acc.data[i] += tensor.fyt.data[i] - dy.data[i] + grady_row(i);
    }
    s.bregman_update(gxu, gyu, gxv, gyv);
    record(k + 1);
    const auto& rec = res.trace.records;
    if (k >= 1 && rec[rec.size() - 1].h > rec[rec.size() - 2].h + 1e-6)
      res.trace.warnings.push_back("constraint residual increased at outer iteration " +
                                   std::to_string(k + 1));
  }
  return res;
}

FlowField solve_horn_schunck(const MotionTensor& tensor, double alpha, int sweeps) {
  if (!(alpha > 0.0)) throw std::invalid_argument("solve_horn_schunck: alpha must be positive");
  Image ru(tensor.width, tensor.height), rv(tensor.width, tensor.height);
  for (std::size_t i = 0; i < ru.size(); ++i) {
    ru.data[i] = -tensor.b1.data[i];
    rv.data[i] = -tensor.b2.data[i];
  }
  return solve_uv_system(tensor, ru, rv, alpha, FlowField(tensor.width, tensor.height), sweeps);
}

namespace {

OcclusionMask resample_mask(const OcclusionMask& mask, int w, int h) {
  OcclusionMask out(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int sx = static_cast<int>(std::lround((x + 0.5) * mask.width / static_cast<double>(w) - 0.5));
      int sy = static_cast<int>(std::lround((y + 0.5) * mask.height / static_cast<double>(h) - 0.5));
      sx = std::clamp(sx, 0, mask.width - 1);
      sy = std::clamp(sy, 0, mask.height - 1);
      out.at(x, y) = mask.at(sx, sy);
    }
  return out;
}

FlowField compute_flow_masked(const Image& f0, const Image& f1, FlowModel model,
                              const SolverParams& params, const OcclusionMask* occlusion,
                              BregmanTrace* trace) {
  const Image s0 = gaussian_smooth(f0, params.sigma);
  const Image s1 = gaussian_smooth(f1, params.sigma);
  const Pyramid pyr = build_pyramid(s0, s1, params.pyramid_scale, params.pyramid_min_size);

  const int coarsest = static_cast<int>(pyr.levels.size()) - 1;
  FlowField flow(pyr.levels[coarsest].f0.width, pyr.levels[coarsest].f0.height);

  for (int lvl = coarsest; lvl >= 0; --lvl) {
    const Image& lf0 = pyr.levels[lvl].f0;
    const Image& lf1 = pyr.levels[lvl].f1;
    if (lvl != coarsest) {
      flow = upsample_flow(flow, lf0.width, lf0.height);
      if (params.median_radius > 0) flow = median_filter_flow(flow, params.median_radius);
    }

    auto [warped, oob] = warp(lf1, flow);
    OcclusionMask mask = std::move(oob);
    if (occlusion) {
      const OcclusionMask occ = resample_mask(*occlusion, lf0.width, lf0.height);
      for (std::size_t i = 0; i < mask.visible.size(); ++i)
        mask.visible[i] = mask.visible[i] && occ.visible[i];
    }

    const Derivatives derivs = derivatives(lf0, warped);
    const MotionTensor tensor = assemble_motion_tensor(derivs, params.gamma, &mask);

    FlowField increment(lf0.width, lf0.height);
    BregmanTrace level_trace;
    switch (model) {
      case FlowModel::Osb: {
        LevelResult r = solve_osb_level(tensor, params, std::move(increment));
        increment = std::move(r.flow);
        level_trace = std::move(r.trace);
        break;
      }
      case FlowModel::Brox: {
        LevelResult r = solve_brox_level(tensor, params, std::move(increment));
        increment = std::move(r.flow);
        level_trace = std::move(r.trace);
        break;
      }
      case FlowModel::HornSchunck:
        increment = solve_horn_schunck(tensor, params.mu / params.lambda,
                                       params.bregman_iters * params.gs_iters);
        break;
    }
    for (std::size_t i = 0; i < flow.u.size(); ++i) {
      flow.u.data[i] += increment.u.data[i];
      flow.v.data[i] += increment.v.data[i];
    }
    if (trace && lvl == 0) *trace = std::move(level_trace);
  }
  return flow;
}

}  // namespace

FlowField compute_flow(const Image& f0, const Image& f1, FlowModel model,
                       const SolverParams& params, BregmanTrace* trace) {
  params.validate();
  if (!f0.same_size(f1)) throw std::invalid_argument("compute_flow: frame size mismatch");

  if (!params.occlusion_on) return compute_flow_masked(f0, f1, model, params, nullptr, trace);

  // Cross-checking needs both directions: estimate forward and backward flow
  // without occlusion handling, derive the mask, then re-run the forward pass
  // with the data term disabled at occluded pixels.
  SolverParams plain = params;
  plain.occlusion_on = false;
  const FlowField fwd = compute_flow_masked(f0, f1, model, plain, nullptr, nullptr);
  const FlowField bwd = compute_flow_masked(f1, f0, model, plain, nullptr, nullptr);
  const OcclusionMask mask = detect_occlusions(fwd, bwd, params.occlusion_threshold);
  return compute_flow_masked(f0, f1, model, plain, &mask, trace);
}

}  // namespace bregflow
