#include "ncpd/calculus.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ncpd {

namespace {

// Y^(n) = unfold(E, n) * khatri_rao_except(n), an I_n x R matrix.
Matrix mttkrp(const Shape& shape, const Vector& x, const DenseTensor& e, Index mode) {
  return unfold(e, mode) * khatri_rao_except(shape, x, mode);
}

Vector gradient_from_residual(const Shape& shape, const Vector& x, const DenseTensor& e) {
  Vector g(shape.size());
  const auto lambda = weights_view(shape, x);
  for (Index n = 0; n < shape.order(); ++n) {
    const Matrix y = mttkrp(shape, x, e, n);
    factor_view(shape, g, n) = y * lambda.asDiagonal();
    if (n == 0) {
      weights_view(shape, g) = (factor_view(shape, x, 0).array() * y.array()).colwise().sum().transpose();
    }
  }
  return g;
}

}  // namespace

Vector gradient(const Shape& shape, const Vector& x, const DenseTensor& t) {
  return value_and_gradient(shape, x, t).grad;
}

ValueAndGradient value_and_gradient(const Shape& shape, const Vector& x, const DenseTensor& t) {
  check_shape(shape, x, t);
  DenseTensor e = tensor_from_cpd(shape, x);
  e.values() -= t.values();
  ValueAndGradient out;
  out.f = 0.5 * e.values().squaredNorm();
  out.grad = gradient_from_residual(shape, x, e);
  return out;
}

GramianOperator::GramianOperator(Shape shape, const Vector& x, EvalCounters* counters)
    : shape_(std::move(shape)), x_(x), counters_(counters) {
  if (x_.size() != shape_.size()) throw std::invalid_argument("Gramian: point length does not match shape");
  const Index order = shape_.order();
  const Index rank = shape_.rank;
  for (Index n = 0; n < order; ++n) {
    const auto a = factor_view(shape_, x_, n);
    cross_.push_back(a.transpose() * a);
  }
  gamma_all_ = Matrix::Ones(rank, rank);
  for (const auto& w : cross_) gamma_all_.array() *= w.array();
  for (Index n = 0; n < order; ++n) gamma_.push_back(hadamard_except(n, n));
}

Matrix GramianOperator::hadamard_except(Index skip1, Index skip2) const {
  Matrix h = Matrix::Ones(shape_.rank, shape_.rank);
  for (Index m = 0; m < shape_.order(); ++m) {
    if (m != skip1 && m != skip2) h.array() *= cross_[static_cast<std::size_t>(m)].array();
  }
  return h;
}

Vector GramianOperator::apply(const Vector& v) const {
  if (v.size() != shape_.size()) {
    throw std::invalid_argument("Gramian apply: vector length " + std::to_string(v.size()) +
                                ", expected " + std::to_string(shape_.size()));
  }
  if (counters_) counters_->add_gramian();

  const Index order = shape_.order();
  const auto lambda = weights_view(shape_, x_);
  const auto mu = weights_view(shape_, v);
  const Eigen::RowVectorXd lambda_row = lambda.transpose();
  const Eigen::RowVectorXd mu_row = mu.transpose();

  // cross_v[p](r, s) = a_r^(p) . v_s^(p)
  std::vector<Matrix> cross_v;
  for (Index p = 0; p < order; ++p) {
    cross_v.push_back(factor_view(shape_, x_, p).transpose() * factor_view(shape_, v, p));
  }

  Vector out(shape_.size());
  auto out_lambda = weights_view(shape_, out);
  out_lambda.setZero();

  for (Index n = 0; n < order; ++n) {
    const auto& gamma_n = gamma_[static_cast<std::size_t>(n)];
    const Matrix m1 = (gamma_n.array().rowwise() * lambda_row.array()).matrix();
    Matrix m2 = (gamma_n.array().rowwise() * mu_row.array()).matrix();
    for (Index p = 0; p < order; ++p) {
      if (p == n) continue;
      m2.array() += (cross_v[static_cast<std::size_t>(p)].array() * hadamard_except(n, p).array())
                        .rowwise() *
                    lambda_row.array();
    }
    factor_view(shape_, out, n) =
        (factor_view(shape_, v, n) * m1.transpose() + factor_view(shape_, x_, n) * m2.transpose()) *
        lambda.asDiagonal();

    out_lambda += ((cross_v[static_cast<std::size_t>(n)].array() * gamma_n.array()).rowwise() *
                   lambda_row.array())
                      .matrix()
                      .rowwise()
                      .sum();
  }
  out_lambda += gamma_all_ * mu;
  return out;
}

Matrix explicit_jacobian(const Shape& shape, const Vector& x, Index max_rows) {
  const Index rows = product(shape.dims);
  if (rows > max_rows) {
    throw std::invalid_argument("explicit_jacobian: " + std::to_string(rows) +
                                " rows exceeds cap " + std::to_string(max_rows));
  }
  if (x.size() != shape.size()) throw std::invalid_argument("point length does not match shape");
  const Index order = shape.order();
  const Index rank = shape.rank;
  const auto lambda = weights_view(shape, x);
  Matrix jac = Matrix::Zero(rows, shape.size());

  std::vector<Index> idx(static_cast<std::size_t>(order), 0);
  for (Index lin = 0; lin < rows; ++lin) {
    for (Index r = 0; r < rank; ++r) {
      double full = 1.0;
      for (Index m = 0; m < order; ++m) full *= x[shape.column_offset(m, r) + idx[static_cast<std::size_t>(m)]];
      jac(lin, shape.weights_offset() + r) = full;
      for (Index n = 0; n < order; ++n) {
        double partial = lambda[r];
        for (Index m = 0; m < order; ++m) {
          if (m != n) partial *= x[shape.column_offset(m, r) + idx[static_cast<std::size_t>(m)]];
        }
        jac(lin, shape.column_offset(n, r) + idx[static_cast<std::size_t>(n)]) = partial;
      }
    }
    for (std::size_t m = 0; m < idx.size(); ++m) {
      if (++idx[m] < shape.dims[m]) break;
      idx[m] = 0;
    }
  }
  return jac;
}

KernelBasis kernel_basis(const Shape& shape, const Vector& x) {
  if (x.size() != shape.size()) throw std::invalid_argument("point length does not match shape");
  const Index order = shape.order();
  const Index rank = shape.rank;
  KernelBasis kb;
  kb.K = Matrix::Zero(shape.size(), order * rank);
  const auto lambda = weights_view(shape, x);
  for (Index n = 0; n < order; ++n) {
    for (Index r = 0; r < rank; ++r) {
      const Index col = n * rank + r;
      const auto a = x.segment(shape.column_offset(n, r), shape.dim(n));
      if (a.squaredNorm() == 0.0) kb.degenerate = true;
      kb.K.col(col).segment(shape.column_offset(n, r), shape.dim(n)) = a;
      kb.K(shape.weights_offset() + r, col) = -lambda[r];
    }
  }
  for (Index r = 0; r < rank; ++r) {
    if (lambda[r] == 0.0) kb.degenerate = true;
  }
  return kb;
}

Index numerical_rank(const Matrix& m, double rel_tol) {
  const Vector s = Eigen::BDCSVD<Matrix>(m).singularValues();
  if (s.size() == 0 || s[0] == 0.0) return 0;
  Index rank = 0;
  for (Index i = 0; i < s.size(); ++i) {
    if (s[i] > rel_tol * s[0]) ++rank;
  }
  return rank;
}

double cauchy_scale(const GramianOperator& gramian, const Vector& g, bool reciprocal) {
  const double gg = g.squaredNorm();
  if (gg == 0.0) throw std::invalid_argument("cauchy_scale: zero gradient");
  const double gGg = g.dot(gramian.apply(g));
  return reciprocal ? gg / gGg : gGg / gg;
}

Problem::Problem(const DenseTensor& tensor, Index rank)
    : tensor_(&tensor), shape_(tensor.dims(), rank) {}

double Problem::objective(const Vector& x) const {
  counters_.add_f();
  return objective_f(shape_, x, *tensor_);
}

ValueAndGradient Problem::value_and_gradient(const Vector& x) const {
  counters_.add_f();
  counters_.add_grad();
  ValueAndGradient vg = ncpd::value_and_gradient(shape_, x, *tensor_);
  if (gradient_fault_ != 0.0) vg.grad.array() += gradient_fault_;
  return vg;
}

GramianOperator Problem::gramian(const Vector& x) const {
  return GramianOperator(shape_, x, &counters_);
}

}  // namespace ncpd
