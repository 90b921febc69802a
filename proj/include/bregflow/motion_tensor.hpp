#pragma once

#include "bregflow/image.hpp"
#include "bregflow/imageops.hpp"

namespace bregflow {

// Per-pixel Gram matrix of the linearized constancy assumptions,
//   J11 = fx^2 + gamma (fxx^2 + fxy^2),
//   J12 = fx fy + gamma (fxx fxy + fxy fyy),
//   J22 = fy^2 + gamma (fxy^2 + fyy^2),
// together with the right-hand-side offsets
//   b1 = fx ft + gamma (fxx fxt + fxy fyt),
//   b2 = fy ft + gamma (fxy fxt + fyy fyt),
// and the raw derivative bundles needed by the robust data coupling.
struct MotionTensor {
  int width = 0;
  int height = 0;
  double gamma = 0.0;
  Image j11, j12, j22;
  Image b1, b2;
  Image fx, fy, fxx, fxy, fyy;
  Image ft, fxt, fyt;

  bool same_size(const Image& img) const { return img.width == width && img.height == height; }
};

// Occluded pixels (mask = 0) get every tensor entry, bundle row and offset
// zeroed, which disables the data term there.
MotionTensor assemble_motion_tensor(const Derivatives& derivs, double gamma,
                                    const OcclusionMask* occlusion = nullptr);

}  // namespace bregflow
