#pragma once

#include "ncpd/tensor.hpp"

#include <atomic>
#include <cstdint>

namespace ncpd {

struct EvalCounts {
  std::int64_t f = 0;
  std::int64_t grad = 0;
  std::int64_t gramian = 0;
};

/// Thread-safe evaluation tallies shared by a problem and its operators.
class EvalCounters {
public:
  void add_f() { f_.fetch_add(1, std::memory_order_relaxed); }
  void add_grad() { grad_.fetch_add(1, std::memory_order_relaxed); }
  void add_gramian() { gramian_.fetch_add(1, std::memory_order_relaxed); }
  EvalCounts snapshot() const {
    return {f_.load(std::memory_order_relaxed), grad_.load(std::memory_order_relaxed),
            gramian_.load(std::memory_order_relaxed)};
  }

private:
  std::atomic<std::int64_t> f_{0};
  std::atomic<std::int64_t> grad_{0};
  std::atomic<std::int64_t> gramian_{0};
};

struct ValueAndGradient {
  double f = 0.0;
  Vector grad;
};

/// Gradient JF(x)^T F(x) of 0.5*||F||^2, computed with one MTTKRP per mode.
Vector gradient(const Shape& shape, const Vector& x, const DenseTensor& t);
ValueAndGradient value_and_gradient(const Shape& shape, const Vector& x, const DenseTensor& t);

/// Matrix-free JF(x)^T JF(x). Construction caches the R x R cross products
/// A^(n)^T A^(n); each apply then costs O(R^2 sum I_n + N^2 R^2).
class GramianOperator {
public:
  GramianOperator(Shape shape, const Vector& x, EvalCounters* counters = nullptr);

  Vector apply(const Vector& v) const;
  Index size() const { return shape_.size(); }
  const Shape& shape() const { return shape_; }

private:
  // Hadamard product of cross_[m] over all m except `skip1` and `skip2`.
  Matrix hadamard_except(Index skip1, Index skip2) const;

  Shape shape_;
  Vector x_;
  std::vector<Matrix> cross_;
  std::vector<Matrix> gamma_;  // Hadamard over m != n
  Matrix gamma_all_;
  EvalCounters* counters_;
};

/// Dense JF(x), rows in tensor order and columns in flat point order. Only for
/// small test instances; throws if prod(I_n) exceeds `max_rows`.
Matrix explicit_jacobian(const Shape& shape, const Vector& x, Index max_rows = 100000);

struct KernelBasis {
  Matrix K;
  bool degenerate = false;  // some lambda_r == 0 or a zero factor column
};

/// Basis of the scaling null space of JF: column (n, r) carries a_r^(n) in the
/// block of column a_r^(n) and -lambda_r in the weight slot r.
KernelBasis kernel_basis(const Shape& shape, const Vector& x);

/// Number of singular values above rel_tol times the largest one.
Index numerical_rank(const Matrix& m, double rel_tol = 1e-10);

/// Rayleigh quotient g^T G g / ||g||^2, or its reciprocal.
double cauchy_scale(const GramianOperator& gramian, const Vector& g, bool reciprocal = false);

/// A tensor together with evaluation counters. Every objective, gradient and
/// Gramian construction routed through here is tallied.
class Problem {
public:
  Problem(const DenseTensor& tensor, Index rank);

  const DenseTensor& tensor() const { return *tensor_; }
  const Shape& shape() const { return shape_; }

  double objective(const Vector& x) const;
  ValueAndGradient value_and_gradient(const Vector& x) const;
  GramianOperator gramian(const Vector& x) const;

  EvalCounts counts() const { return counters_.snapshot(); }
  EvalCounters& counters() const { return counters_; }

  /// Test hook: adds `bias` to every gradient entry returned.
  void set_gradient_fault(double bias) { gradient_fault_ = bias; }

private:
  const DenseTensor* tensor_;
  Shape shape_;
  mutable EvalCounters counters_;
  double gradient_fault_ = 0.0;
};

}  // namespace ncpd
