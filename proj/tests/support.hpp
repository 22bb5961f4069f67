#pragma once

#include "ncpd/calculus.hpp"
#include "ncpd/feasible_set.hpp"
#include "ncpd/rng.hpp"

#include <cmath>
#include <vector>

namespace ncpd::testing {

inline double rel_err(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

inline double rel_err(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

inline Vector random_point(const Shape& shape, Rng& rng) { return rng.normal_vector(shape.size()); }

inline Vector random_feasible(const Shape& shape, Rng& rng) {
  const FeasibleSet set{shape, std::nullopt};
  return project(set, rng.uniform_vector(shape.size()) + Vector::Constant(shape.size(), 0.05)).point;
}

inline DenseTensor random_tensor(const std::vector<Index>& dims, Rng& rng) {
  return DenseTensor(dims, rng.uniform_vector(product(dims)));
}

/// Entry of the CPD model by direct summation over r and the factor rows.
inline double model_entry(const Shape& shape, const Vector& x, const std::vector<Index>& idx) {
  double sum = 0.0;
  for (Index r = 0; r < shape.rank; ++r) {
    double term = x[shape.weights_offset() + r];
    for (Index n = 0; n < shape.order(); ++n) {
      term *= x[shape.column_offset(n, r) + idx[static_cast<std::size_t>(n)]];
    }
    sum += term;
  }
  return sum;
}

/// The model tensor assembled entry by entry; idx enumerates first index fastest.
inline Vector model_by_loops(const Shape& shape, const Vector& x) {
  const Index total = product(shape.dims);
  Vector out(total);
  std::vector<Index> idx(shape.dims.size(), 0);
  for (Index lin = 0; lin < total; ++lin) {
    out[lin] = model_entry(shape, x, idx);
    for (std::size_t n = 0; n < idx.size(); ++n) {
      if (++idx[n] < shape.dims[n]) break;
      idx[n] = 0;
    }
  }
  return out;
}

inline double objective_by_loops(const Shape& shape, const Vector& x, const DenseTensor& t) {
  return 0.5 * (model_by_loops(shape, x) - t.values()).squaredNorm();
}

inline Vector fd_gradient(const Shape& shape, const Vector& x, const DenseTensor& t, double h = 1e-6) {
  Vector g(x.size());
  for (Index k = 0; k < x.size(); ++k) {
    Vector xp = x;
    Vector xm = x;
    xp[k] += h;
    xm[k] -= h;
    g[k] = (objective_by_loops(shape, xp, t) - objective_by_loops(shape, xm, t)) / (2 * h);
  }
  return g;
}

inline Matrix fd_jacobian(const Shape& shape, const Vector& x, double h = 1e-6) {
  Matrix j(product(shape.dims), x.size());
  for (Index k = 0; k < x.size(); ++k) {
    Vector xp = x;
    Vector xm = x;
    xp[k] += h;
    xm[k] -= h;
    j.col(k) = (model_by_loops(shape, xp) - model_by_loops(shape, xm)) / (2 * h);
  }
  return j;
}

}  // namespace ncpd::testing
