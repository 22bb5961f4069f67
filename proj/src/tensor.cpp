#include "ncpd/tensor.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace ncpd {

Index product(const std::vector<Index>& dims) {
  return std::accumulate(dims.begin(), dims.end(), Index{1}, std::multiplies<>());
}

namespace {

void validate_dims(const std::vector<Index>& dims) {
  if (dims.size() < 2) {
    throw std::invalid_argument("tensor order must be at least 2");
  }
  for (Index d : dims) {
    if (d < 1) throw std::invalid_argument("tensor dimensions must be positive");
  }
}

}  // namespace

DenseTensor::DenseTensor(std::vector<Index> dims) : dims_(std::move(dims)) {
  validate_dims(dims_);
  values_ = Vector::Zero(product(dims_));
}

DenseTensor::DenseTensor(std::vector<Index> dims, Vector values)
    : dims_(std::move(dims)), values_(std::move(values)) {
  validate_dims(dims_);
  if (values_.size() != product(dims_)) {
    throw std::invalid_argument("tensor value count " + std::to_string(values_.size()) +
                                " does not match dimensions (" +
                                std::to_string(product(dims_)) + ")");
  }
}

Index DenseTensor::linear_index(std::initializer_list<Index> idx) const {
  if (static_cast<Index>(idx.size()) != order()) {
    throw std::invalid_argument("index arity does not match tensor order");
  }
  Index lin = 0;
  Index stride = 1;
  std::size_t n = 0;
  for (Index i : idx) {
    if (i < 0 || i >= dims_[n]) throw std::out_of_range("tensor index out of range");
    lin += i * stride;
    stride *= dims_[n];
    ++n;
  }
  return lin;
}

double DenseTensor::operator()(std::initializer_list<Index> idx) const {
  return values_[linear_index(idx)];
}

Shape::Shape(std::vector<Index> dims_, Index rank_) : dims(std::move(dims_)), rank(rank_) {
  validate_dims(dims);
  if (rank < 1) throw std::invalid_argument("rank must be at least 1");
}

Index Shape::factor_offset(Index mode) const {
  Index off = 0;
  for (Index m = 0; m < mode; ++m) off += dim(m) * rank;
  return off;
}

ConstFactorView factor_view(const Shape& shape, const Vector& x, Index mode) {
  return {x.data() + shape.factor_offset(mode), shape.dim(mode), shape.rank};
}

FactorView factor_view(const Shape& shape, Vector& x, Index mode) {
  return {x.data() + shape.factor_offset(mode), shape.dim(mode), shape.rank};
}

Eigen::Map<const Vector> weights_view(const Shape& shape, const Vector& x) {
  return {x.data() + shape.weights_offset(), shape.rank};
}

Eigen::Map<Vector> weights_view(const Shape& shape, Vector& x) {
  return {x.data() + shape.weights_offset(), shape.rank};
}

Shape CpdPoint::shape() const {
  std::vector<Index> dims;
  dims.reserve(factors.size());
  for (const auto& f : factors) {
    if (f.cols() != weights.size()) {
      throw std::invalid_argument("factor column count does not match number of weights");
    }
    dims.push_back(f.rows());
  }
  return {std::move(dims), weights.size()};
}

Vector CpdPoint::flatten() const {
  const Shape s = shape();
  Vector x(s.size());
  for (Index n = 0; n < s.order(); ++n) factor_view(s, x, n) = factors[static_cast<std::size_t>(n)];
  weights_view(s, x) = weights;
  return x;
}

CpdPoint CpdPoint::from_flat(const Shape& shape, const Vector& x) {
  if (x.size() != shape.size()) throw std::invalid_argument("flat vector length does not match shape");
  CpdPoint p;
  for (Index n = 0; n < shape.order(); ++n) p.factors.emplace_back(factor_view(shape, x, n));
  p.weights = weights_view(shape, x);
  return p;
}

Matrix khatri_rao(const std::vector<Matrix>& matrices) {
  if (matrices.empty()) throw std::invalid_argument("khatri_rao needs at least one matrix");
  const Index cols = matrices.front().cols();
  for (const auto& m : matrices) {
    if (m.cols() != cols) throw std::invalid_argument("khatri_rao: column counts differ");
  }
  Matrix out = matrices.front();
  for (std::size_t k = 1; k < matrices.size(); ++k) {
    const Matrix& b = matrices[k];
    Matrix next(out.rows() * b.rows(), cols);
    for (Index r = 0; r < cols; ++r) {
      for (Index i = 0; i < out.rows(); ++i) {
        next.col(r).segment(i * b.rows(), b.rows()) = out(i, r) * b.col(r);
      }
    }
    out = std::move(next);
  }
  return out;
}

Matrix khatri_rao_except(const Shape& shape, const Vector& x, Index skip) {
  std::vector<Matrix> mats;
  for (Index m = shape.order() - 1; m >= 0; --m) {
    if (m != skip) mats.emplace_back(factor_view(shape, x, m));
  }
  return khatri_rao(mats);
}

void check_shape(const Shape& shape, const Vector& x, const DenseTensor& t) {
  if (x.size() != shape.size()) throw std::invalid_argument("point length does not match shape");
  if (t.dims() != shape.dims) throw std::invalid_argument("tensor dimensions do not match point");
}

DenseTensor tensor_from_cpd(const Shape& shape, const Vector& x) {
  if (x.size() != shape.size()) throw std::invalid_argument("point length does not match shape");
  const ConstFactorView a1 = factor_view(shape, x, 0);
  const Matrix kr = khatri_rao_except(shape, x, 0);
  const Matrix unfolded = a1 * weights_view(shape, x).asDiagonal() * kr.transpose();
  return DenseTensor(shape.dims, Eigen::Map<const Vector>(unfolded.data(), unfolded.size()));
}

DenseTensor tensor_from_cpd(const CpdPoint& point, const std::vector<Index>& dims) {
  const Shape s = point.shape();
  if (s.dims != dims) throw std::invalid_argument("point shapes do not match tensor dimensions");
  return tensor_from_cpd(s, point.flatten());
}

namespace {

struct ModeSplit {
  Index left;
  Index mid;
  Index right;
};

ModeSplit split_at(const std::vector<Index>& dims, Index mode) {
  if (mode < 0 || mode >= static_cast<Index>(dims.size())) {
    throw std::out_of_range("mode " + std::to_string(mode) + " out of range");
  }
  ModeSplit s{1, dims[static_cast<std::size_t>(mode)], 1};
  for (Index m = 0; m < mode; ++m) s.left *= dims[static_cast<std::size_t>(m)];
  for (Index m = mode + 1; m < static_cast<Index>(dims.size()); ++m) {
    s.right *= dims[static_cast<std::size_t>(m)];
  }
  return s;
}

}  // namespace

Matrix unfold(const DenseTensor& t, Index mode) {
  const ModeSplit s = split_at(t.dims(), mode);
  Matrix out(s.mid, s.left * s.right);
  const double* v = t.values().data();
  for (Index rr = 0; rr < s.right; ++rr) {
    for (Index i = 0; i < s.mid; ++i) {
      for (Index l = 0; l < s.left; ++l) {
        out(i, l + s.left * rr) = v[l + s.left * (i + s.mid * rr)];
      }
    }
  }
  return out;
}

DenseTensor fold(const Matrix& m, Index mode, const std::vector<Index>& dims) {
  const ModeSplit s = split_at(dims, mode);
  if (m.rows() != s.mid || m.cols() != s.left * s.right) {
    throw std::invalid_argument("fold: matrix shape does not match dimensions");
  }
  DenseTensor t(dims);
  double* v = t.values().data();
  for (Index rr = 0; rr < s.right; ++rr) {
    for (Index i = 0; i < s.mid; ++i) {
      for (Index l = 0; l < s.left; ++l) {
        v[l + s.left * (i + s.mid * rr)] = m(i, l + s.left * rr);
      }
    }
  }
  return t;
}

Vector residual_F(const Shape& shape, const Vector& x, const DenseTensor& t) {
  check_shape(shape, x, t);
  return tensor_from_cpd(shape, x).values() - t.values();
}

Vector residual_F(const CpdPoint& point, const DenseTensor& t) {
  return residual_F(point.shape(), point.flatten(), t);
}

double objective_f(const Shape& shape, const Vector& x, const DenseTensor& t) {
  return 0.5 * residual_F(shape, x, t).squaredNorm();
}

double objective_f(const CpdPoint& point, const DenseTensor& t) {
  return objective_f(point.shape(), point.flatten(), t);
}

}  // namespace ncpd
