#pragma once

#include "ncpd/prox.hpp"

#include <functional>

namespace ncpd {

struct CgReport {
  Index iterations = 0;
  double relative_residual = 0.0;  // ||A x - b|| / ||b||, recomputed at exit
  bool converged = false;
  bool breakdown = false;
};

using LinearOperator = std::function<Vector(const Vector&)>;

struct CgResult {
  Vector x;
  CgReport report;
};

/// Conjugate gradients for a symmetric positive semidefinite operator.
CgResult cg_normal(const LinearOperator& op, const Vector& rhs, double tol, Index maxit);

struct CgSettings {
  /// Relative tolerance. With forcing on it is min(forcing_cap, sqrt(||R||))
  /// while ||R|| > forcing_switch and tol_min afterwards.
  double tol_min = 1e-10;
  double forcing_cap = 0.1;
  double forcing_switch = 1e-2;
  bool forcing = true;
  /// 0 means 3 * (d + R).
  Index maxit = 0;
  /// Adds damping * I to H^T H.
  double damping = 0.0;
};

double cg_tolerance(const CgSettings& cfg, double residual_norm);

struct DirectionResult {
  Vector d;
  CgReport report;
  bool ok = false;
};

/// Solves H^T H d = -H^T R(x) matrix-free. `ok` is false when the operator
/// cannot be built (degenerate projection) or CG breaks down.
DirectionResult solve_direction(const Problem& problem, const FeasibleSet& set, const StepState& s,
                                const CgSettings& cfg,
                                ClarkeConvention convention = ClarkeConvention::zero);

DirectionResult solve_direction(const JhatOperator& hat, const Vector& residual, const CgSettings& cfg);

}  // namespace ncpd
