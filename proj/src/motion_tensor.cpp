#include "bregflow/motion_tensor.hpp"

#include <stdexcept>

namespace bregflow {

MotionTensor assemble_motion_tensor(const Derivatives& derivs, double gamma,
                                    const OcclusionMask* occlusion) {
  if (gamma < 0.0) throw std::invalid_argument("assemble_motion_tensor: gamma must be >= 0");
  const int w = derivs.fx.width, h = derivs.fx.height;
  if (occlusion && (occlusion->width != w || occlusion->height != h))
    throw std::invalid_argument("assemble_motion_tensor: occlusion mask size mismatch");

  MotionTensor t;
  t.width = w;
  t.height = h;
  t.gamma = gamma;
  t.fx = derivs.fx;
  t.fy = derivs.fy;
  t.fxx = derivs.fxx;
  t.fxy = derivs.fxy;
  t.fyy = derivs.fyy;
  t.ft = derivs.ft;
  t.fxt = derivs.fxt;
  t.fyt = derivs.fyt;
  t.j11 = Image(w, h);
  t.j12 = Image(w, h);
  t.j22 = Image(w, h);
  t.b1 = Image(w, h);
  t.b2 = Image(w, h);

  for (std::size_t i = 0; i < t.j11.size(); ++i) {
    if (occlusion && occlusion->visible[i] == 0) {
      t.fx.data[i] = t.fy.data[i] = 0.0;
      t.fxx.data[i] = t.fxy.data[i] = t.fyy.data[i] = 0.0;
      t.ft.data[i] = t.fxt.data[i] = t.fyt.data[i] = 0.0;
      continue;
    }
    const double fx = t.fx.data[i], fy = t.fy.data[i];
    const double fxx = t.fxx.data[i], fxy = t.fxy.data[i], fyy = t.fyy.data[i];
    const double ft = t.ft.data[i], fxt = t.fxt.data[i], fyt = t.fyt.data[i];
    t.j11.data[i] = fx * fx + gamma * (fxx * fxx + fxy * fxy);
    t.j12.data[i] = fx * fy + gamma * (fxx * fxy + fxy * fyy);
    t.j22.data[i] = fy * fy + gamma * (fxy * fxy + fyy * fyy);
    t.b1.data[i] = fx * ft + gamma * (fxx * fxt + fxy * fyt);
    t.b2.data[i] = fy * ft + gamma * (fxy * fxt + fyy * fyt);
  }
  return t;
}

}  // namespace bregflow
