#pragma once

#include "ncpd/tensor.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ncpd {

/// Diagonal value used for the orthant Jacobian where w_i == 0 exactly.
enum class ClarkeConvention { zero = 0, one = 1 };

/// Product of unit-sphere/orthant intersections (one per factor column) and the
/// nonnegative orthant for the weights, optionally boxed by lambda <= M.
struct FeasibleSet {
  Shape shape;
  std::optional<double> box_bound;
  double tolerance = 1e-10;
};

struct Projection {
  Vector point;
  /// Flat column indices (n * R + r) whose [w]_+ was zero; those columns are
  /// replaced by the uniform unit vector.
  std::vector<Index> degenerate_columns;
  bool degenerate() const { return !degenerate_columns.empty(); }
};

Projection project(const FeasibleSet& set, const Vector& w);

/// One element of the Clarke Jacobian of the projection at w. Block diagonal:
/// each factor column acts as D (I - z z^T) D / ||[w]_+|| with D the clamp
/// pattern, each weight entry as 0 or 1.
class ProjJacobianElement {
public:
  Vector apply(const Vector& v) const;
  /// Blocks are symmetric, so the transpose coincides with apply.
  Vector apply_transpose(const Vector& v) const { return apply(v); }
  Matrix dense() const;
  Index size() const { return shape_.size(); }

private:
  friend ProjJacobianElement proj_jacobian(const FeasibleSet&, const Vector&, ClarkeConvention);

  Shape shape_;
  Vector z_;          // projected point (flat, factor blocks normalized)
  Vector mask_;       // diagonal of the orthant/box clamp Jacobian
  Vector inv_norms_;  // 1 / ||[w]_+|| per column, size N * R
};

class DegenerateProjection : public std::runtime_error {
public:
  DegenerateProjection(Index mode, Index column);
  Index mode;
  Index column;
};

/// Throws DegenerateProjection if some factor column has [w]_+ == 0.
ProjJacobianElement proj_jacobian(const FeasibleSet& set, const Vector& w,
                                  ClarkeConvention convention = ClarkeConvention::zero);

struct FeasibilityReport {
  bool feasible = true;
  std::vector<std::string> violations;
};

FeasibilityReport is_feasible(const FeasibleSet& set, const Vector& x, double tol);
inline FeasibilityReport is_feasible(const FeasibleSet& set, const Vector& x) {
  return is_feasible(set, x, set.tolerance);
}

}  // namespace ncpd
