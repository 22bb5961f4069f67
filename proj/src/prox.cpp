#include "ncpd/prox.hpp"

#include <stdexcept>

namespace ncpd {

double fbe_value(double fx, const Vector& grad, const Vector& r, double gamma) {
  return fx - grad.dot(r) + r.squaredNorm() / (2.0 * gamma);
}

StepState fb_step(const FeasibleSet& set, const Vector& x, double gamma, const ValueAndGradient& vg) {
  if (!(gamma > 0.0)) throw std::invalid_argument("fb_step: gamma must be positive");
  StepState s;
  s.x = x;
  s.gamma = gamma;
  s.fx = vg.f;
  s.grad = vg.grad;
  s.w = x - gamma * vg.grad;
  Projection p = project(set, s.w);
  s.z = std::move(p.point);
  s.degenerate = p.degenerate();
  s.r = x - s.z;
  s.fbe = fbe_value(s.fx, s.grad, s.r, gamma);
  return s;
}

StepState fb_step(const Problem& problem, const FeasibleSet& set, const Vector& x, double gamma) {
  return fb_step(set, x, gamma, problem.value_and_gradient(x));
}

bool gamma_condition(const StepState& s, double fz, double alpha) {
  return fz <= s.fbe - (1.0 - alpha) / (2.0 * s.gamma) * s.r.squaredNorm();
}

GammaTest gamma_condition(const Problem& problem, const StepState& s, double alpha) {
  GammaTest t;
  t.fz = problem.objective(s.z);
  t.pass = gamma_condition(s, t.fz, alpha);
  return t;
}

JhatOperator::JhatOperator(const Problem& problem, const FeasibleSet& set, const StepState& s,
                           ClarkeConvention convention)
    : gramian_(problem.gramian(s.x)), proj_(proj_jacobian(set, s.w, convention)), gamma_(s.gamma) {}

JhatOperator::JhatOperator(GramianOperator gramian, ProjJacobianElement proj, double gamma)
    : gramian_(std::move(gramian)), proj_(std::move(proj)), gamma_(gamma) {
  if (gramian_.size() != proj_.size()) throw std::invalid_argument("JhatOperator: size mismatch");
}

Vector JhatOperator::apply(const Vector& v) const {
  const Vector inner = gamma_ == 0.0 ? v : Vector(v - gamma_ * gramian_.apply(v));
  return v - proj_.apply(inner);
}

Vector JhatOperator::apply_transpose(const Vector& v) const {
  const Vector pv = proj_.apply_transpose(v);
  if (gamma_ == 0.0) return v - pv;
  return v - pv + gamma_ * gramian_.apply(pv);
}

Matrix JhatOperator::dense() const {
  const Index n = size();
  Matrix m(n, n);
  for (Index j = 0; j < n; ++j) m.col(j) = apply(Vector::Unit(n, j));
  return m;
}

}  // namespace ncpd
