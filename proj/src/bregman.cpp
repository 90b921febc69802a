#include "bregflow/bregman.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "bregflow/shrinkage.hpp"

namespace bregflow {

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2_sq(const Vec& a) { return dot(a, a); }

double ConvexProblem::penalty(const Vec& u) const {
  Vec r = op.apply(u);
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double d = r[i] - offset[i];
    s += d * d;
  }
  return 0.5 * s;
}

Vec ConvexProblem::penalty_gradient(const Vec& u) const {
  Vec r = op.apply(u);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= offset[i];
  return op.apply_t(r);
}

double bregman_divergence(const std::function<double(const Vec&)>& cost, const Vec& x,
                          const Vec& y, const Vec& p) {
  Vec diff(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) diff[i] = x[i] - y[i];
  return cost(x) - cost(y) - dot(p, diff);
}

BregmanResult bregman_iterate(const ConvexProblem& problem, double lambda, const Vec& u0,
                              int max_iters, const InnerSolver& inner_solver, double tol,
                              const Vec* reference, double warn_eps) {
  if (!(lambda > 0.0)) throw std::invalid_argument("bregman_iterate: lambda must be positive");
  if (max_iters < 0) throw std::invalid_argument("bregman_iterate: max_iters must be >= 0");

  BregmanResult res;
  res.u = u0;
  Vec bk = problem.offset;
  Vec p(u0.size(), 0.0);  // p^(0) = 0, valid by the precondition on u0

  auto record = [&](int k) {
    BregmanRecord r;
    r.k = k;
    r.h = problem.penalty(res.u);
    r.cost = problem.cost(res.u);
    if (reference) r.divergence = bregman_divergence(problem.cost, *reference, res.u, p);
    res.trace.records.push_back(r);
    return r.h;
  };

  double h = record(0);
  for (int k = 0; k < max_iters && h > tol; ++k) {
    res.u = inner_solver(problem, lambda, bk, res.u);
    Vec au = problem.op.apply(res.u);
    Vec residual(au.size());
    for (std::size_t i = 0; i < au.size(); ++i) residual[i] = problem.offset[i] - au[i];
    for (std::size_t i = 0; i < bk.size(); ++i) bk[i] += residual[i];
    if (reference) {
      Vec pt = problem.op.apply_t(residual);
      for (std::size_t i = 0; i < p.size(); ++i) p[i] += lambda * pt[i];
    }
    const double h_new = record(k + 1);
    if (h_new > h + warn_eps) {
      std::ostringstream os;
      os << "constraint penalty increased at iteration " << (k + 1) << ": " << h << " -> " << h_new;
      res.trace.warnings.push_back(os.str());
    }
    h = h_new;
  }
  return res;
}

SplitBregmanResult split_bregman(const std::function<double(const Vec&)>& g_cost,
                                 const LinearOperator& lambda_op, const Vec& b,
                                 const SplitBregmanParams& params, const SbmSubsolver& subsolver,
                                 const Vec& u0) {
  if (!(params.mu > 0.0)) throw std::invalid_argument("split_bregman: mu must be positive");
  if (params.outer_iters < 1 || params.inner_sweeps < 1)
    throw std::invalid_argument("split_bregman: N and M must be >= 1");
  if (params.norm == SlackNorm::L2Coupled &&
      (params.group_size < 1 || b.size() % params.group_size != 0))
    throw std::invalid_argument("split_bregman: group_size must divide the slack dimension");

  SplitBregmanResult res;
  res.u = u0;
  res.d.assign(b.size(), 0.0);
  Vec bk = b;

  auto constraint_penalty = [&](const Vec& u, const Vec& d) {
    Vec lu = lambda_op.apply(u);
    double s = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double r = d[i] - lu[i] - b[i];
      s += r * r;
    }
    return 0.5 * s;
  };
  auto record = [&](int k) {
    BregmanRecord r;
    r.k = k;
    r.h = constraint_penalty(res.u, res.d);
    r.cost = g_cost(res.u);
    res.trace.records.push_back(r);
    return r.h;
  };

  double h = record(0);
  for (int k = 0; k < params.outer_iters; ++k) {
    Vec lu;
    for (int j = 0; j < params.inner_sweeps; ++j) {
      res.u = subsolver(res.u, res.d, bk);
      lu = lambda_op.apply(res.u);
      if (params.norm == SlackNorm::L1) {
        for (std::size_t i = 0; i < res.d.size(); ++i)
          res.d[i] = shrink(lu[i] + bk[i], 1.0 / params.mu);
      } else {
        for (std::size_t i = 0; i < res.d.size(); ++i) res.d[i] = lu[i] + bk[i];
        for (std::size_t g = 0; g + params.group_size <= res.d.size(); g += params.group_size)
          gshrink_inplace(res.d.data() + g, params.group_size, 1.0 / params.mu);
      }
    }
    for (std::size_t i = 0; i < bk.size(); ++i) bk[i] += b[i] - res.d[i] + lu[i];

    const double h_new = record(k + 1);
    if (h_new > h + params.warn_eps) {
      std::ostringstream os;
      os << "constraint residual increased at iteration " << (k + 1) << ": " << h << " -> " << h_new;
      res.trace.warnings.push_back(os.str());
    }
    h = h_new;
    if (params.tol > 0.0 && h <= params.tol) break;
  }
  return res;
}

ConvergenceReport convergence_report(const BregmanTrace& trace, double lambda,
                                     std::optional<double> d0, std::optional<double> q_norm,
                                     double eps) {
  if (trace.empty()) throw std::invalid_argument("convergence_report: trace is empty");

  ConvergenceReport rep;
  rep.eps = eps;

  for (std::size_t i = 1; i < trace.records.size(); ++i) {
    const double excess = trace.records[i].h - trace.records[i - 1].h;
    if (excess > eps) {
      if (rep.monotone) rep.first_monotone_violation = trace.records[i].k;
      rep.monotone = false;
    }
    if (excess > rep.max_monotone_excess) rep.max_monotone_excess = excess;
  }

  if (d0.has_value()) {
    rep.envelope_checked = true;
    for (const auto& r : trace.records) {
      if (r.k < 1) continue;
      const double bound = *d0 / (lambda * r.k);
      const double excess = r.h - bound;
      if (excess > eps) {
        if (rep.envelope_ok) rep.first_envelope_violation = r.k;
        rep.envelope_ok = false;
      }
      if (excess > rep.max_envelope_excess) rep.max_envelope_excess = excess;
    }
  }

  if (q_norm.has_value()) {
    rep.divergence_checked = true;
    for (const auto& r : trace.records) {
      if (r.k < 1 || std::isnan(r.divergence)) continue;
      const double bound = (*q_norm) * (*q_norm) / (2.0 * lambda * r.k);
      const double excess = r.divergence - bound;
      if (excess > eps) {
        if (rep.divergence_ok) rep.first_divergence_violation = r.k;
        rep.divergence_ok = false;
      }
      if (excess > rep.max_divergence_excess) rep.max_divergence_excess = excess;
    }
  }
  return rep;
}

std::string ConvergenceReport::summary() const {
  std::ostringstream os;
  os << "monotone decrease: " << (monotone ? "ok" : "violated");
  if (!monotone)
    os << " (first at k=" << first_monotone_violation << ", max excess " << max_monotone_excess << ")";
  os << "\n";
  if (envelope_checked) {
    os << "1/k envelope: " << (envelope_ok ? "ok" : "violated");
    if (!envelope_ok)
      os << " (first at k=" << first_envelope_violation << ", max excess " << max_envelope_excess << ")";
    os << "\n";
  }
  if (divergence_checked) {
    os << "source-condition bound: " << (divergence_ok ? "ok" : "violated");
    if (!divergence_ok)
      os << " (first at k=" << first_divergence_violation << ", max excess " << max_divergence_excess
         << ")";
    os << "\n";
  }
  return os.str();
}

}  // namespace bregflow
