#include "ncpd/experiments.hpp"
#include "ncpd/panoc.hpp"
#include "support.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <sstream>

using namespace ncpd;
using namespace ncpd::testing;

namespace {

ExactInstance exact(std::uint64_t seed, std::vector<Index> dims = {10, 10, 10}, Index rank = 5) {
  InstanceSpec spec;
  spec.dims = std::move(dims);
  spec.rank = rank;
  spec.zeros_per_factor = std::min<Index>(spec.zeros_per_factor, spec.dims.back() * rank / 4);
  spec.negatives_per_factor = spec.zeros_per_factor;
  spec.seed = seed;
  return gen_exact_instance(spec);
}

}  // namespace

TEST_SUITE("panoc") {

TEST_CASE("configuration validation") {
  SolverConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.alpha = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SolverConfig{};
  cfg.beta = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SolverConfig{};
  cfg.box_bound = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("Lipschitz estimate") {
  const double mu = 3.7;
  const GradientFn quad = [mu](const Vector& v) { return Vector(mu * v); };
  Rng rng(1);
  const Vector x0 = rng.normal_vector(12);
  const double l1 = estimate_lipschitz(quad, x0, quad(x0), 1e-6, 5);
  CHECK(std::abs(l1 - mu) <= 1e-6 * mu);
  CHECK(estimate_lipschitz(quad, x0, quad(x0), 1e-6, 5) == l1);
  const GradientFn flat = [](const Vector& v) { return Vector(Vector::Zero(v.size())); };
  CHECK(estimate_lipschitz(flat, x0, flat(x0), 1e-6, 5) == 1e-12);

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Shape shape({3, 4, 3}, 2);
    const DenseTensor t = random_tensor(shape.dims, rng);
    const Problem problem(t, 2);
    const Vector x = random_feasible(shape, rng);
    SolverConfig cfg;
    cfg.seed = seed;
    const double lip = estimate_lipschitz(problem, x, cfg);
    const Matrix j = explicit_jacobian(shape, x);
    const double top = Eigen::SelfAdjointEigenSolver<Matrix>(j.transpose() * j).eigenvalues().maxCoeff();
    CHECK(lip <= 100 * top);
    CHECK(lip >= top / 100);
  }
}

TEST_CASE("matched error ignores term order") {
  Rng rng(2);
  const Shape shape({4, 3, 3}, 3);
  const Vector x = random_feasible(shape, rng);
  Vector y = x;
  for (Index n = 0; n < 3; ++n) factor_view(shape, y, n).col(0).swap(factor_view(shape, y, n).col(2));
  std::swap(y[shape.weights_offset()], y[shape.weights_offset() + 2]);
  CHECK(matched_relative_error(shape, y, x) <= 1e-15);
  CHECK(align_to_reference(shape, y, x) == x);
  CHECK(matched_relative_error(shape, x, x) == 0.0);
}

TEST_CASE("exact start terminates immediately") {
  const ExactInstance inst = exact(3);
  const Problem problem(inst.tensor, 5);
  const SolverResult res = panoc_solve(problem, inst.reference, SolverConfig{});
  CHECK(res.reason == Termination::tolerance);
  CHECK(res.iterations == 0);
  REQUIRE(res.trace.records.size() == 1);
  CHECK(res.trace.records[0].rnorm <= 1e-14);
  CHECK(res.trace.records[0].kind == StepKind::stop);
  CHECK(pgd_solve(problem, inst.reference, SolverConfig{}).iterations == 0);
}

TEST_CASE("perturbed exact instance converges fast") {
  const ExactInstance inst = exact(1);
  const Problem problem(inst.tensor, 5);
  const Vector x0 = perturb_solution(problem.shape(), inst.reference, 1);
  SolverConfig cfg;
  cfg.seed = 1;
  const SolverResult res = panoc_solve(problem, x0, cfg, &inst.reference);
  CHECK(res.reason == Termination::tolerance);
  CHECK(res.iterations <= 30);
  CHECK(res.f <= 1e-20 * inst.tensor.values().squaredNorm());
  CHECK(is_feasible(FeasibleSet{problem.shape(), std::nullopt}, res.z, 1e-12).feasible);
  CHECK(matched_relative_error(problem.shape(), res.z, inst.reference) <= 1e-8);
  CHECK(res.trace.has_error());
  CHECK(res.trace.records.back().kind == StepKind::stop);

  const double alpha = cfg.alpha;
  const auto& recs = res.trace.records;
  for (std::size_t k = 0; k + 1 < recs.size(); ++k) {
    const auto& a = recs[k];
    const auto& b = recs[k + 1];
    CHECK(b.fbe >= -1e-30);
    if (a.kind == StepKind::gauss_newton && b.gamma_halvings == 0 && b.gamma >= a.gamma) {
      CHECK(b.fbe <= a.fbe - (1 - alpha) / (2 * a.gamma) * cfg.beta * a.rnorm * a.rnorm + 1e-14 * a.fbe);
    }
  }
}

TEST_CASE("proximal-gradient step decreases the envelope") {
  Rng rng(4);
  const Shape shape({4, 4, 3}, 2);
  const DenseTensor t = random_tensor(shape.dims, rng);
  const Problem problem(t, 2);
  const FeasibleSet set{shape, std::nullopt};
  const double alpha = 0.95;
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = random_feasible(shape, rng);
    const StepState s = fb_step(problem, set, x, std::pow(10.0, rng.uniform(-4.0, -1.0)));
    const GammaTest test = gamma_condition(problem, s, alpha);
    if (!test.pass) continue;
    const Vector& xp = pgd_step_fallback(s);
    CHECK(xp == s.z);
    const StepState next = fb_step(problem, set, xp, s.gamma);
    CHECK(next.fbe <= s.fbe - (1 - alpha) / (2 * s.gamma) * s.r.squaredNorm() + 1e-12);
  }
}

TEST_CASE("projected gradient equals the driver without directions") {
  InstanceSpec spec;
  spec.dims = {5, 4, 3};
  spec.rank = 2;
  spec.zeros_per_factor = 2;
  spec.negatives_per_factor = 2;
  spec.seed = 5;
  const InexactInstance inst = gen_inexact_instance(spec);
  const Shape shape(spec.dims, spec.rank);
  const Vector x0 = random_feasible_point(shape, 5);
  SolverConfig cfg;
  cfg.max_iters = 200;
  const Problem p1(inst.tensor, 2);
  const SolverResult a = pgd_solve(p1, x0, cfg);
  SolverConfig manual = cfg;
  manual.use_direction = false;
  manual.max_tau_halvings = 0;
  const Problem p2(inst.tensor, 2);
  const SolverResult b = panoc_solve(p2, x0, manual);
  std::ostringstream ta, tb;
  write_trace_csv(ta, a.trace);
  write_trace_csv(tb, b.trace);
  CHECK(ta.str() == tb.str());
  CHECK(a.z == b.z);
  for (const auto& r : a.trace.records) {
    CHECK(r.cg_iterations == 0);
    CHECK(r.kind != StepKind::gauss_newton);
  }
}

TEST_CASE("iteration limit and trace format") {
  const ExactInstance inst = exact(6);
  const Problem problem(inst.tensor, 5);
  SolverConfig cfg;
  cfg.max_iters = 2;
  const Vector x0 = random_feasible_point(problem.shape(), 6);
  const SolverResult res = panoc_solve(problem, x0, cfg);
  CHECK(res.reason == Termination::max_iters);
  CHECK(res.iterations == 2);
  CHECK(res.trace.records.size() == 3);

  std::ostringstream out;
  write_trace_csv(out, res.trace);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "k,f,fbe,rnorm,gamma,tau,gh,th,kind,fevals,gevals,gapplies");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
  CHECK(std::string(to_string(Termination::max_iters)) == "max-iters");
}

TEST_CASE("evaluation counters grow monotonically along the trace") {
  const ExactInstance inst = exact(7, {6, 5, 4}, 3);
  const Problem problem(inst.tensor, 3);
  const SolverResult res = panoc_solve(problem, perturb_solution(problem.shape(), inst.reference, 7), SolverConfig{});
  for (std::size_t k = 1; k < res.trace.records.size(); ++k) {
    CHECK(res.trace.records[k].counts.grad > res.trace.records[k - 1].counts.grad);
    CHECK(res.trace.records[k].counts.f >= res.trace.records[k - 1].counts.f);
  }
}

TEST_CASE("solver is deterministic") {
  const ExactInstance inst = exact(8, {6, 6, 6}, 3);
  const Problem p1(inst.tensor, 3);
  const Problem p2(inst.tensor, 3);
  const Vector x0 = random_feasible_point(p1.shape(), 8);
  SolverConfig cfg;
  cfg.max_iters = 50;
  const SolverResult a = panoc_solve(p1, x0, cfg);
  const SolverResult b = panoc_solve(p2, x0, cfg);
  std::ostringstream ta, tb;
  write_trace_csv(ta, a.trace);
  write_trace_csv(tb, b.trace);
  CHECK(ta.str() == tb.str());
}

TEST_CASE("box bound is respected") {
  const ExactInstance inst = exact(9, {5, 5, 5}, 2);
  const Problem problem(inst.tensor, 2);
  SolverConfig cfg;
  cfg.box_bound = 0.5;
  cfg.max_iters = 100;
  const SolverResult res = panoc_solve(problem, random_feasible_point(problem.shape(), 9), cfg);
  CHECK(weights_view(problem.shape(), res.z).maxCoeff() <= 0.5);
  CHECK(is_feasible(FeasibleSet{problem.shape(), 0.5}, res.z, 1e-12).feasible);
}

TEST_CASE("bad inputs") {
  const ExactInstance inst = exact(10, {4, 4, 4}, 2);
  const Problem problem(inst.tensor, 2);
  CHECK_THROWS(panoc_solve(problem, Vector::Zero(3), SolverConfig{}));
  Vector x = inst.reference;
  x[0] = NAN;
  CHECK_THROWS(panoc_solve(problem, x, SolverConfig{}));
}

}
