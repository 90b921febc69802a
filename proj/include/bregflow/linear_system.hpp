#pragma once

#include <cstdint>
#include <string>

#include "bregflow/image.hpp"
#include "bregflow/motion_tensor.hpp"

namespace bregflow {

enum class SweepOrder { Raster, RedBlack };

// Applies the coupled stencil operator
//   (M x)_u = J11 u + J12 v - theta * Lap u,
//   (M x)_v = J12 u + J22 v - theta * Lap v,
// with the 5-point Laplacian, missing neighbors dropped at boundaries.
// The matrix is never materialized.
FlowField apply_uv_operator(const MotionTensor& tensor, double theta, const FlowField& x);

// Gauss-Seidel on the coupled system with exact per-pixel 2x2 block solves.
// theta > 0 keeps every local block strictly diagonally dominant.
FlowField solve_uv_system(const MotionTensor& tensor, const Image& rhs_u, const Image& rhs_v,
                          double theta, FlowField init, int sweeps,
                          SweepOrder order = SweepOrder::Raster);

// Quadratic form (u,v)^T M (u,v) in the reordered edge form:
//   sum_i [J11 u^2 + 2 J12 u v + J22 v^2]
//   + theta * sum_{right/down edges} [(u_i - u_k)^2 + (v_i - v_k)^2].
double quadratic_form(const MotionTensor& tensor, double theta, const FlowField& x);

struct SpdReport {
  int trials = 0;
  double min_random_form = 0.0;       // min of the form over random nonzero fields
  double constant_witness_form = 0.0; // form on the constant field orthogonal to the mean gradient
  double witness_u = 0.0, witness_v = 0.0;
  bool planar_degenerate = false;     // image gradient constant and curvature zero
  std::string summary() const;
};

// Probes positive definiteness of the assembled system by evaluating the
// quadratic form on random fields and on the adversarial constant field.
// The form can only vanish on a nonzero field when the image is a plane.
SpdReport spd_check(const MotionTensor& tensor, double theta, int trials,
                    std::uint64_t seed = 42);

}  // namespace bregflow
