#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace bregflow {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b);
double norm2_sq(const Vec& a);

// Linear operator given by its action and the action of its transpose.
struct LinearOperator {
  std::function<Vec(const Vec&)> apply;
  std::function<Vec(const Vec&)> apply_t;
};

// Constrained problem  min J(u)  s.t.  H(u) = 0  with  H(u) = 1/2 ||Au - b||^2.
struct ConvexProblem {
  std::function<double(const Vec&)> cost;  // J, proper convex
  LinearOperator op;                       // A
  Vec offset;                              // b

  double penalty(const Vec& u) const;            // H(u)
  Vec penalty_gradient(const Vec& u) const;      // A^T (Au - b)
};

struct BregmanRecord {
  int k = 0;
  double h = 0.0;  // constraint penalty H at iterate k
  double cost = std::numeric_limits<double>::quiet_NaN();        // J at iterate k
  double divergence = std::numeric_limits<double>::quiet_NaN();  // D_J^{p^(k)}(ref, u^(k))
};

struct BregmanTrace {
  std::vector<BregmanRecord> records;
  std::vector<std::string> warnings;

  bool empty() const { return records.empty(); }
  std::size_t size() const { return records.size(); }
  const BregmanRecord& back() const { return records.back(); }
};

// D_J^p(x, y) = J(x) - J(y) - <p, x - y>.  p must be a subgradient of J at y.
double bregman_divergence(const std::function<double(const Vec&)>& cost, const Vec& x,
                          const Vec& y, const Vec& p);

// Minimizes J(u) + (lambda/2) ||Au - target||^2 to the accuracy agreed with the caller,
// warm-started at init.
using InnerSolver =
    std::function<Vec(const ConvexProblem& problem, double lambda, const Vec& target, const Vec& init)>;

struct BregmanResult {
  Vec u;
  BregmanTrace trace;
};

// Additive-back-substitution form of the Bregman iteration:
//   b^(0) = b,  u^(k+1) = argmin J(u) + (lambda/2)||Au - b^(k)||^2,
//   b^(k+1) = b^(k) + b - A u^(k+1).
// Requires u0 with 0 in dJ(u0). Stops when H(u^(k)) <= tol (absolute) or after
// max_iters iterations. When `reference` (a solution of H = 0) is supplied, the
// trace records D_J^{p^(k)}(reference, u^(k)) with p maintained via
// p^(k+1) = p^(k) + lambda A^T (b - A u^(k+1)).
// An increase of H across an iteration beyond warn_eps is recorded as a
// trace warning, not an error.
BregmanResult bregman_iterate(const ConvexProblem& problem, double lambda, const Vec& u0,
                              int max_iters, const InnerSolver& inner_solver, double tol,
                              const Vec* reference = nullptr, double warn_eps = 1e-6);

enum class SlackNorm { L1, L2Coupled };

struct SplitBregmanParams {
  double mu = 1.0;
  int outer_iters = 10;   // N
  int inner_sweeps = 1;   // M
  SlackNorm norm = SlackNorm::L1;
  int group_size = 1;     // block length for the coupled l2 shrinkage
  double tol = 0.0;       // absolute threshold on the constraint penalty; 0 disables
  double warn_eps = 1e-6;
};

// Minimizes G(u) + (mu/2) || d - Lambda u - target ||^2, warm-started at u_init.
using SbmSubsolver = std::function<Vec(const Vec& u_init, const Vec& d, const Vec& target)>;

struct SplitBregmanResult {
  Vec u;
  Vec d;
  BregmanTrace trace;
};

// Split Bregman driver for  min ||Lambda u + b||_k + G(u)  (k = 1 or coupled 2):
// N outer iterations, M alternating sweeps of delegated u-minimization and
// closed-form d-shrinkage, then b^(k+1) = b^(k) + b - d^(k+1) + Lambda u^(k+1).
// The trace records the constraint penalty 1/2 || d - Lambda u - b ||^2 per
// outer iteration (record 0 is the initial state).
SplitBregmanResult split_bregman(const std::function<double(const Vec&)>& g_cost,
                                 const LinearOperator& lambda_op, const Vec& b,
                                 const SplitBregmanParams& params, const SbmSubsolver& subsolver,
                                 const Vec& u0);

struct ConvergenceReport {
  double eps = 1e-6;

  bool monotone = true;
  int first_monotone_violation = -1;   // k where H(k) > H(k-1) + eps
  double max_monotone_excess = 0.0;

  bool envelope_checked = false;       // H(u^(k)) <= d0 / (lambda k)
  bool envelope_ok = true;
  int first_envelope_violation = -1;
  double max_envelope_excess = 0.0;

  bool divergence_checked = false;     // D_J^{p^(k)} <= ||q||^2 / (2 lambda k)
  bool divergence_ok = true;
  int first_divergence_violation = -1;
  double max_divergence_excess = 0.0;

  bool all_ok() const { return monotone && envelope_ok && divergence_ok; }
  std::string summary() const;
};

// Checks the decrease and 1/k properties of a recorded trace. Violations are
// report entries, never exceptions. d0 = D_J^{p^(0)}(ref, u^(0)) enables the
// envelope check; q_norm enables the source-condition error bound check.
ConvergenceReport convergence_report(const BregmanTrace& trace, double lambda,
                                     std::optional<double> d0 = std::nullopt,
                                     std::optional<double> q_norm = std::nullopt,
                                     double eps = 1e-6);

}  // namespace bregflow
