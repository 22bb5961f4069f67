#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace ncpd {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// N-way dense array stored first-index-fastest: entry (i_1, ..., i_N) lives at
/// i_1 + I_1*(i_2 + I_2*(i_3 + ...)).
class DenseTensor {
public:
  DenseTensor() = default;
  explicit DenseTensor(std::vector<Index> dims);
  DenseTensor(std::vector<Index> dims, Vector values);

  const std::vector<Index>& dims() const { return dims_; }
  Index order() const { return static_cast<Index>(dims_.size()); }
  Index dim(Index mode) const { return dims_[static_cast<std::size_t>(mode)]; }
  Index numel() const { return values_.size(); }

  const Vector& values() const { return values_; }
  Vector& values() { return values_; }

  double operator()(std::initializer_list<Index> idx) const;
  Index linear_index(std::initializer_list<Index> idx) const;

  double frobenius_norm() const { return values_.norm(); }

private:
  std::vector<Index> dims_;
  Vector values_;
};

Index product(const std::vector<Index>& dims);

/// Sizes of a CPD variable. The flat layout is the factor matrices A^(1..N),
/// each stored column-major (so column a_r^(n) is contiguous), followed by the
/// R weights. Flat length is d + R with d = R * sum(I_n).
struct Shape {
  std::vector<Index> dims;
  Index rank = 0;

  Shape() = default;
  Shape(std::vector<Index> dims_, Index rank_);

  Index order() const { return static_cast<Index>(dims.size()); }
  Index dim(Index mode) const { return dims[static_cast<std::size_t>(mode)]; }
  Index factor_offset(Index mode) const;
  Index weights_offset() const { return factor_offset(order()); }
  Index size() const { return weights_offset() + rank; }
  Index column_offset(Index mode, Index r) const { return factor_offset(mode) + r * dim(mode); }

  bool operator==(const Shape&) const = default;
};

using FactorView = Eigen::Map<Matrix>;
using ConstFactorView = Eigen::Map<const Matrix>;

ConstFactorView factor_view(const Shape& shape, const Vector& x, Index mode);
FactorView factor_view(const Shape& shape, Vector& x, Index mode);
Eigen::Map<const Vector> weights_view(const Shape& shape, const Vector& x);
Eigen::Map<Vector> weights_view(const Shape& shape, Vector& x);

/// Factor matrices plus weights; the optimization variable x = (a, lambda).
struct CpdPoint {
  std::vector<Matrix> factors;
  Vector weights;

  Shape shape() const;
  Index rank() const { return weights.size(); }
  Vector flatten() const;
  static CpdPoint from_flat(const Shape& shape, const Vector& x);
};

/// Sum_r lambda_r a_r^(1) o ... o a_r^(N).
DenseTensor tensor_from_cpd(const Shape& shape, const Vector& x);
DenseTensor tensor_from_cpd(const CpdPoint& point, const std::vector<Index>& dims);

/// Mode-n unfolding, I_n x prod_{m != n} I_m. Column index enumerates the
/// remaining modes with the lowest mode fastest, which matches
///   unfold(model, n) == A^(n) diag(lambda) khatri_rao({A^(N), ..., A^(1)} \ A^(n))^T.
/// Modes are zero-based.
Matrix unfold(const DenseTensor& t, Index mode);
DenseTensor fold(const Matrix& m, Index mode, const std::vector<Index>& dims);

/// Column r of the result is kron(M_0[:, r], M_1[:, r], ...), last factor fastest.
Matrix khatri_rao(const std::vector<Matrix>& matrices);

/// Khatri-Rao product of all factors except `skip`, taken in decreasing mode order.
Matrix khatri_rao_except(const Shape& shape, const Vector& x, Index skip);

Vector residual_F(const Shape& shape, const Vector& x, const DenseTensor& t);
Vector residual_F(const CpdPoint& point, const DenseTensor& t);

double objective_f(const Shape& shape, const Vector& x, const DenseTensor& t);
double objective_f(const CpdPoint& point, const DenseTensor& t);

void check_shape(const Shape& shape, const Vector& x, const DenseTensor& t);

}  // namespace ncpd
