#pragma once

#include "ncpd/calculus.hpp"
#include "ncpd/feasible_set.hpp"

namespace ncpd {

/// Everything the forward-backward step produces at a fixed (x, gamma).
struct StepState {
  Vector x;
  double gamma = 0.0;
  double fx = 0.0;
  Vector grad;
  Vector w;  // x - gamma * grad
  Vector z;  // proj_C(w)
  Vector r;  // x - z
  double fbe = 0.0;
  bool degenerate = false;
};

/// Evaluates f and its gradient once (through `problem`, so it is counted).
StepState fb_step(const Problem& problem, const FeasibleSet& set, const Vector& x, double gamma);

/// Same, reusing an already computed value/gradient pair at x (e.g. after a
/// change of gamma only).
StepState fb_step(const FeasibleSet& set, const Vector& x, double gamma, const ValueAndGradient& vg);

inline const Vector& residual_map(const StepState& s) { return s.r; }
inline double fbe(const StepState& s) { return s.fbe; }

/// f(x) - <grad, r> + ||r||^2 / (2 gamma)
double fbe_value(double fx, const Vector& grad, const Vector& r, double gamma);

/// Pass condition of the stepsize test: f(z) <= fbe - (1 - alpha)/(2 gamma) ||r||^2.
bool gamma_condition(const StepState& s, double fz, double alpha);

struct GammaTest {
  bool pass = false;
  double fz = 0.0;
};

/// Evaluates f(z) through `problem` and applies the test above.
GammaTest gamma_condition(const Problem& problem, const StepState& s, double alpha);

/// Gauss-Newton element of the generalized Jacobian of the residual map:
///   H v = v - P (v - gamma G v),  H^T v = v - P v + gamma G P v,
/// with G = JF^T JF at x and P a Clarke element of the projection at w.
class JhatOperator {
public:
  JhatOperator(const Problem& problem, const FeasibleSet& set, const StepState& s,
               ClarkeConvention convention = ClarkeConvention::zero);
  JhatOperator(GramianOperator gramian, ProjJacobianElement proj, double gamma);

  Vector apply(const Vector& v) const;
  Vector apply_transpose(const Vector& v) const;
  /// H^T H v
  Vector normal_apply(const Vector& v) const { return apply_transpose(apply(v)); }
  Index size() const { return gramian_.size(); }
  Matrix dense() const;

  const GramianOperator& gramian() const { return gramian_; }

private:
  GramianOperator gramian_;
  ProjJacobianElement proj_;
  double gamma_;
};

}  // namespace ncpd
