#include "ncpd/feasible_set.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ncpd {

namespace {

void check_length(const FeasibleSet& set, const Vector& w) {
  if (w.size() != set.shape.size()) {
    throw std::invalid_argument("vector length " + std::to_string(w.size()) +
                                " does not match feasible set size " +
                                std::to_string(set.shape.size()));
  }
}

double clamp_weight(const FeasibleSet& set, double v) {
  v = std::max(v, 0.0);
  if (set.box_bound) v = std::min(v, *set.box_bound);
  return v;
}

}  // namespace

Projection project(const FeasibleSet& set, const Vector& w) {
  check_length(set, w);
  const Shape& s = set.shape;
  Projection out;
  out.point = w;
  for (Index n = 0; n < s.order(); ++n) {
    for (Index r = 0; r < s.rank; ++r) {
      auto col = out.point.segment(s.column_offset(n, r), s.dim(n));
      col = col.cwiseMax(0.0);
      const double norm = col.norm();
      if (norm == 0.0) {
        col.setConstant(1.0 / std::sqrt(static_cast<double>(s.dim(n))));
        out.degenerate_columns.push_back(n * s.rank + r);
      } else {
        col /= norm;
      }
    }
  }
  auto lambda = weights_view(s, out.point);
  for (Index r = 0; r < s.rank; ++r) lambda[r] = clamp_weight(set, lambda[r]);
  return out;
}

DegenerateProjection::DegenerateProjection(Index mode_, Index column_)
    : std::runtime_error("projection is not differentiable: column " + std::to_string(column_) +
                         " of factor " + std::to_string(mode_) + " has no positive entries"),
      mode(mode_),
      column(column_) {}

ProjJacobianElement proj_jacobian(const FeasibleSet& set, const Vector& w,
                                  ClarkeConvention convention) {
  check_length(set, w);
  const Shape& s = set.shape;
  const double tie = convention == ClarkeConvention::one ? 1.0 : 0.0;

  ProjJacobianElement jac;
  jac.shape_ = s;
  jac.z_ = w;
  jac.mask_.resize(w.size());
  jac.inv_norms_.resize(s.order() * s.rank);

  for (Index i = 0; i < s.weights_offset(); ++i) {
    jac.mask_[i] = w[i] > 0.0 ? 1.0 : (w[i] < 0.0 ? 0.0 : tie);
  }
  for (Index n = 0; n < s.order(); ++n) {
    for (Index r = 0; r < s.rank; ++r) {
      auto col = jac.z_.segment(s.column_offset(n, r), s.dim(n));
      col = col.cwiseMax(0.0);
      const double norm = col.norm();
      if (norm == 0.0) throw DegenerateProjection(n, r);
      col /= norm;
      jac.inv_norms_[n * s.rank + r] = 1.0 / norm;
    }
  }
  const auto lambda_w = weights_view(s, w);
  auto lambda_z = weights_view(s, jac.z_);
  for (Index r = 0; r < s.rank; ++r) {
    const double v = lambda_w[r];
    double d = v > 0.0 ? 1.0 : (v < 0.0 ? 0.0 : tie);
    if (set.box_bound) {
      const double m = *set.box_bound;
      if (v > m) d = 0.0;
      else if (v == m) d = tie;
    }
    jac.mask_[s.weights_offset() + r] = d;
    lambda_z[r] = clamp_weight(set, v);
  }
  return jac;
}

Vector ProjJacobianElement::apply(const Vector& v) const {
  if (v.size() != shape_.size()) throw std::invalid_argument("projection Jacobian: length mismatch");
  Vector out = mask_.cwiseProduct(v);
  for (Index n = 0; n < shape_.order(); ++n) {
    for (Index r = 0; r < shape_.rank; ++r) {
      const Index off = shape_.column_offset(n, r);
      const Index len = shape_.dim(n);
      auto u = out.segment(off, len);
      const auto z = z_.segment(off, len);
      u -= z.dot(u) * z;
      u = mask_.segment(off, len).cwiseProduct(u) * inv_norms_[n * shape_.rank + r];
    }
  }
  return out;
}

Matrix ProjJacobianElement::dense() const {
  const Index n = size();
  Matrix m(n, n);
  for (Index j = 0; j < n; ++j) m.col(j) = apply(Vector::Unit(n, j));
  return m;
}

FeasibilityReport is_feasible(const FeasibleSet& set, const Vector& x, double tol) {
  check_length(set, x);
  const Shape& s = set.shape;
  FeasibilityReport rep;
  auto fail = [&](std::string msg) {
    rep.feasible = false;
    rep.violations.push_back(std::move(msg));
  };
  for (Index n = 0; n < s.order(); ++n) {
    for (Index r = 0; r < s.rank; ++r) {
      const auto col = x.segment(s.column_offset(n, r), s.dim(n));
      if (col.minCoeff() < -tol) {
        fail("factor " + std::to_string(n) + " column " + std::to_string(r) + " has negative entry");
      }
      const double norm = col.norm();
      if (std::abs(norm - 1.0) > tol) {
        std::ostringstream os;
        os << "factor " << n << " column " << r << " has norm " << norm;
        fail(os.str());
      }
    }
  }
  const auto lambda = weights_view(s, x);
  for (Index r = 0; r < s.rank; ++r) {
    if (lambda[r] < -tol) fail("weight " + std::to_string(r) + " is negative");
    if (set.box_bound && lambda[r] > *set.box_bound + tol) {
      fail("weight " + std::to_string(r) + " exceeds box bound");
    }
  }
  return rep;
}

}  // namespace ncpd
