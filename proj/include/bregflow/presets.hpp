#pragma once

#include "bregflow/solvers.hpp"

namespace bregflow::presets {

// Per-sequence parameter presets for the two benchmark sequences, 30/150
// Bregman iterations, 10 Gauss-Seidel sweeps, 3 alternating minimizations.

inline SolverParams osb_rubberwhale() {
  SolverParams p;
  p.lambda = 0.01;
  p.mu = 11.25;
  p.gamma = 20.0;
  p.sigma = 0.40;
  p.bregman_iters = 30;
  p.sweeps = 3;
  p.gs_iters = 10;
  p.pyramid_scale = 0.9;
  return p;
}

inline SolverParams osb_grove2() {
  SolverParams p = osb_rubberwhale();
  p.lambda = 0.025;
  p.mu = 6.30;
  p.gamma = 1.50;
  p.sigma = 0.75;
  return p;
}

inline SolverParams brox_rubberwhale() {
  SolverParams p;
  p.lambda = 0.0065;
  p.mu = 0.23;
  p.gamma = 1.0;
  p.sigma = 0.38;
  p.bregman_iters = 150;
  p.sweeps = 3;
  p.gs_iters = 10;
  p.pyramid_scale = 0.9;
  return p;
}

inline SolverParams brox_grove2() {
  SolverParams p = brox_rubberwhale();
  p.lambda = 0.065;
  p.mu = 0.41;
  p.gamma = 1.0;
  p.sigma = 0.90;
  return p;
}

}  // namespace bregflow::presets
