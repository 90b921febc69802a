#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace bregflow {

// Soft shrinkage: unique minimizer of |x| + (1/(2*alpha)) * (x - y)^2.
// The dead zone is the closed interval [-alpha, alpha].
inline double shrink(double y, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("shrink: alpha must be positive");
  if (y > alpha) return y - alpha;
  if (y < -alpha) return y + alpha;
  return 0.0;
}

inline std::vector<double> shrink(const std::vector<double>& y, double alpha) {
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = shrink(y[i], alpha);
  return out;
}

// Generalized shrinkage: max(||b|| - alpha, 0) * b / ||b||, with 0 * (0/0) = 0.
// Minimizer of ||x||_2 + (1/(2*alpha)) * ||x - b||^2, rotationally invariant.
inline void gshrink_inplace(double* b, std::size_t n, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("gshrink: alpha must be positive");
  double norm2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) norm2 += b[i] * b[i];
  const double norm = std::sqrt(norm2);
  if (norm <= alpha) {
    for (std::size_t i = 0; i < n; ++i) b[i] = 0.0;
    return;
  }
  const double scale = (norm - alpha) / norm;
  for (std::size_t i = 0; i < n; ++i) b[i] *= scale;
}

inline std::vector<double> gshrink(const std::vector<double>& b, double alpha) {
  std::vector<double> out = b;
  gshrink_inplace(out.data(), out.size(), alpha);
  return out;
}

}  // namespace bregflow
