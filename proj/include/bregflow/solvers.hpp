#pragma once

#include "bregflow/bregman.hpp"
#include "bregflow/image.hpp"
#include "bregflow/imageops.hpp"
#include "bregflow/linear_system.hpp"
#include "bregflow/motion_tensor.hpp"

namespace bregflow {

struct SolverParams {
  double lambda = 0.01;       // data weight
  double gamma = 0.0;         // gradient constancy weight
  double mu = 1.0;            // Bregman coupling weight
  double sigma = 0.0;         // presmoothing std-dev
  int bregman_iters = 30;     // N, outer Bregman iterations
  int sweeps = 3;             // M, alternating minimization sweeps
  int gs_iters = 10;          // Gauss-Seidel sweeps per u,v solve
  double pyramid_scale = 0.9;
  int pyramid_min_size = 16;
  int median_radius = 1;      // 0 disables the per-level median filter
  bool occlusion_on = false;
  double occlusion_threshold = 0.75;
  SweepOrder gs_order = SweepOrder::Raster;

  void validate() const;  // throws std::invalid_argument on violated invariants
};

enum class FlowModel { Osb, Brox, HornSchunck };

struct LevelResult {
  FlowField flow;
  BregmanTrace trace;
};

// Split Bregman for the quadratic-data / coupled-TV model: N outer iterations
// of M alternating sweeps; the u,v update solves the motion-tensor stencil
// system with theta = mu / lambda, the slack update is a coupled generalized
// shrinkage of the per-pixel (grad u, grad v) 4-vector with threshold 1 / mu.
// The trace records the smoothness-constraint penalty per outer iteration.
LevelResult solve_osb_level(const MotionTensor& tensor, const SolverParams& params,
                            FlowField init);

// Split Bregman for the robust-data / coupled-TV model: adds scalar slacks for
// the grey and gradient constancy residuals (shrink thresholds lambda/mu and
// lambda*gamma/mu) with their running accumulators; the u,v update couples all
// data slacks with theta = mu / 2 on the smoothness blocks, as listed.
LevelResult solve_brox_level(const MotionTensor& tensor, const SolverParams& params,
                             FlowField init);

// Quadratic-data / quadratic-smoothness baseline: one linear solve of the
// stencil system with theta = alpha, no Bregman loop.
FlowField solve_horn_schunck(const MotionTensor& tensor, double alpha, int sweeps);

// Full coarse-to-fine pipeline: presmoothing, pyramid, per-level warping and
// re-linearization, median filtering of the upsampled flow, incremental solve.
// When `trace` is non-null it receives the finest-level solver trace.
FlowField compute_flow(const Image& f0, const Image& f1, FlowModel model,
                       const SolverParams& params, BregmanTrace* trace = nullptr);

}  // namespace bregflow
