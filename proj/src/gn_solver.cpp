#include "ncpd/gn_solver.hpp"

#include <algorithm>
#include <cmath>

namespace ncpd {

CgResult cg_normal(const LinearOperator& op, const Vector& rhs, double tol, Index maxit) {
  CgResult out;
  out.x = Vector::Zero(rhs.size());
  const double bnorm = rhs.norm();
  if (!std::isfinite(bnorm)) {
    out.report.breakdown = true;
    return out;
  }
  if (bnorm == 0.0) {
    out.report.converged = true;
    return out;
  }

  Vector r = rhs;
  Vector p = r;
  double rr = r.squaredNorm();
  Index k = 0;
  while (k < maxit && std::sqrt(rr) > tol * bnorm) {
    const Vector ap = op(p);
    const double pap = p.dot(ap);
    if (!std::isfinite(pap) || pap <= 0.0) {
      out.report.breakdown = !std::isfinite(pap);
      break;
    }
    const double step = rr / pap;
    out.x += step * p;
    r -= step * ap;
    const double rr_next = r.squaredNorm();
    ++k;
    if (!std::isfinite(rr_next)) {
      out.report.breakdown = true;
      break;
    }
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  out.report.iterations = k;
  if (!out.x.allFinite()) {
    out.report.breakdown = true;
    return out;
  }
  out.report.relative_residual = (op(out.x) - rhs).norm() / bnorm;
  out.report.converged = !out.report.breakdown && out.report.relative_residual <= tol;
  return out;
}

double cg_tolerance(const CgSettings& cfg, double residual_norm) {
  if (!cfg.forcing) return cfg.tol_min;
  if (residual_norm <= cfg.forcing_switch) return cfg.tol_min;
  return std::max(cfg.tol_min, std::min(cfg.forcing_cap, std::sqrt(residual_norm)));
}

DirectionResult solve_direction(const JhatOperator& hat, const Vector& residual, const CgSettings& cfg) {
  DirectionResult out;
  const Vector rhs = -hat.apply_transpose(residual);
  const Index maxit = cfg.maxit > 0 ? cfg.maxit : 3 * hat.size();
  const double damping = cfg.damping;
  LinearOperator op = [&hat, damping](const Vector& v) {
    Vector y = hat.normal_apply(v);
    if (damping > 0.0) y += damping * v;
    return y;
  };
  CgResult cg = cg_normal(op, rhs, cg_tolerance(cfg, residual.norm()), maxit);
  out.d = std::move(cg.x);
  out.report = cg.report;
  out.ok = !cg.report.breakdown && out.d.allFinite();
  return out;
}

DirectionResult solve_direction(const Problem& problem, const FeasibleSet& set, const StepState& s,
                                const CgSettings& cfg, ClarkeConvention convention) {
  if (s.degenerate) return {};
  try {
    const JhatOperator hat(problem, set, s, convention);
    return solve_direction(hat, s.r, cfg);
  } catch (const DegenerateProjection&) {
    return {};
  }
}

}  // namespace ncpd
