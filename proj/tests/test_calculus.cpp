#include "ncpd/calculus.hpp"
#include "support.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

using namespace ncpd;
using namespace ncpd::testing;

TEST_SUITE("calculus") {

TEST_CASE("gradient vanishes at an exact fit") {
  Rng rng(1);
  const Shape shape({4, 3, 2}, 2);
  const Vector x = random_point(shape, rng);
  CHECK(gradient(shape, x, tensor_from_cpd(shape, x)).isZero(0.0));
}

TEST_CASE("gradient matches central differences") {
  Rng rng(2);
  const Shape shape({4, 3, 2}, 2);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector x = random_point(shape, rng);
    const DenseTensor t = random_tensor(shape.dims, rng);
    CHECK(rel_err(gradient(shape, x, t), fd_gradient(shape, x, t)) <= 1e-6);
  }
}

TEST_CASE("gradient equals J^T F and value_and_gradient agrees") {
  Rng rng(3);
  const Shape shape({3, 4, 2, 2}, 3);
  const Vector x = random_point(shape, rng);
  const DenseTensor t = random_tensor(shape.dims, rng);
  const Vector ref = explicit_jacobian(shape, x).transpose() * residual_F(shape, x, t);
  CHECK(rel_err(gradient(shape, x, t), ref) <= 1e-12);
  const ValueAndGradient vg = value_and_gradient(shape, x, t);
  CHECK(vg.f == doctest::Approx(objective_f(shape, x, t)).epsilon(1e-14));
  CHECK(rel_err(vg.grad, ref) <= 1e-12);
}

TEST_CASE("explicit Jacobian matches differences of the residual") {
  Rng rng(4);
  const Shape shape({4, 3, 2}, 2);
  const Vector x = random_point(shape, rng);
  const Matrix j = explicit_jacobian(shape, x);
  CHECK(j.rows() == 24);
  CHECK(j.cols() == shape.size());
  CHECK(rel_err(j, fd_jacobian(shape, x)) <= 1e-6);
  // Weight columns are the unit-weight rank-1 terms.
  for (Index r = 0; r < shape.rank; ++r) {
    Vector unit = x;
    weights_view(shape, unit).setZero();
    unit[shape.weights_offset() + r] = 1.0;
    CHECK(rel_err(Vector(j.col(shape.weights_offset() + r)), tensor_from_cpd(shape, unit).values()) <= 1e-15);
  }
  CHECK_THROWS(explicit_jacobian(shape, x, 10));
}

TEST_CASE("matrix-free Gramian equals J^T J") {
  Rng rng(5);
  const Shape shape({4, 3, 2}, 2);
  const Vector x = random_point(shape, rng);
  const Matrix j = explicit_jacobian(shape, x);
  const GramianOperator g(shape, x);
  CHECK(g.apply(Vector::Zero(shape.size())).isZero(0.0));
  for (int trial = 0; trial < 5; ++trial) {
    const Vector v = rng.normal_vector(shape.size());
    CHECK(rel_err(g.apply(v), Vector(j.transpose() * (j * v))) <= 1e-12);
  }
  // Also for higher order and N = 2.
  for (const auto& dims : {std::vector<Index>{2, 3, 2, 3}, std::vector<Index>{5, 4}}) {
    const Shape s(dims, 3);
    const Vector y = random_point(s, rng);
    const Matrix jy = explicit_jacobian(s, y);
    const Vector v = rng.normal_vector(s.size());
    CHECK(rel_err(GramianOperator(s, y).apply(v), Vector(jy.transpose() * (jy * v))) <= 1e-12);
  }
}

TEST_CASE("scaling kernel") {
  Rng rng(6);
  const Shape shape({4, 4, 4}, 2);
  const Vector x = random_feasible(shape, rng);
  const KernelBasis kb = kernel_basis(shape, x);
  CHECK_FALSE(kb.degenerate);
  CHECK(kb.K.cols() == 6);
  CHECK(numerical_rank(kb.K) == 6);
  const Matrix j = explicit_jacobian(shape, x);
  CHECK((j * kb.K).norm() <= 1e-10 * j.norm() * kb.K.norm());

  const Matrix gram = j.transpose() * j;
  const GramianOperator g(shape, x);
  for (Index c = 0; c < kb.K.cols(); ++c) {
    CHECK(g.apply(kb.K.col(c)).norm() <= 1e-10 * gram.norm() * kb.K.col(c).norm());
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  Index small = 0;
  for (Index i = 0; i < eig.eigenvalues().size(); ++i) {
    if (std::abs(eig.eigenvalues()[i]) < 1e-10 * gram.norm()) ++small;
  }
  CHECK(small >= 6);

  const Shape s2({3, 5}, 1);
  CHECK(kernel_basis(s2, random_feasible(s2, rng)).K.cols() == 2);
}

TEST_CASE("kernel basis flags zero weights") {
  Rng rng(7);
  const Shape shape({3, 3, 3}, 2);
  Vector x = random_feasible(shape, rng);
  x[shape.weights_offset()] = 0.0;
  CHECK(kernel_basis(shape, x).degenerate);
}

TEST_CASE("numerical rank") {
  Matrix m = Matrix::Zero(4, 3);
  m(0, 0) = 1.0;
  m(1, 1) = 1e-3;
  m(2, 2) = 1e-12;
  CHECK(numerical_rank(m) == 2);
  CHECK(numerical_rank(m, 1e-13) == 3);
  CHECK(numerical_rank(Matrix::Zero(3, 3)) == 0);
}

TEST_CASE("Cauchy scale") {
  Rng rng(8);
  const Shape shape({3, 4, 2}, 2);
  const Vector x = random_point(shape, rng);
  const GramianOperator g(shape, x);
  const Matrix j = explicit_jacobian(shape, x);
  const Matrix gram = j.transpose() * j;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  const Index top = gram.rows() - 1;
  const Vector u = eig.eigenvectors().col(top);
  CHECK(cauchy_scale(g, u) == doctest::Approx(eig.eigenvalues()[top]).epsilon(1e-10));

  const Vector v = rng.normal_vector(shape.size());
  const double ref = v.dot(gram * v) / v.squaredNorm();
  CHECK(std::abs(cauchy_scale(g, v) - ref) <= 1e-12 * ref);
  CHECK(std::abs(cauchy_scale(g, -3.5 * v) - ref) <= 1e-12 * ref);
  CHECK(std::abs(cauchy_scale(g, v, true) - 1.0 / ref) <= 1e-12 / ref);
  CHECK_THROWS(cauchy_scale(g, Vector::Zero(shape.size())));
}

TEST_CASE("problem counts evaluations and injects faults") {
  Rng rng(9);
  const Shape shape({3, 3, 3}, 2);
  const DenseTensor t = random_tensor(shape.dims, rng);
  Problem problem(t, 2);
  const Vector x = random_point(shape, rng);
  problem.objective(x);
  const ValueAndGradient vg = problem.value_and_gradient(x);
  const GramianOperator g = problem.gramian(x);
  g.apply(x);
  g.apply(x);
  const EvalCounts c = problem.counts();
  CHECK(c.f == 2);
  CHECK(c.grad == 1);
  CHECK(c.gramian == 2);
  CHECK(rel_err(vg.grad, gradient(shape, x, t)) == 0.0);

  problem.set_gradient_fault(0.5);
  CHECK(rel_err(problem.value_and_gradient(x).grad, Vector(gradient(shape, x, t).array() + 0.5)) <= 1e-15);
  CHECK_THROWS(Problem(t, 0));
}

}
