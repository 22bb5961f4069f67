#include "ncpd/diagnostics.hpp"

#include "ncpd/prox.hpp"
#include "ncpd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace ncpd {
namespace {

struct Sample {
  Shape shape;
  DenseTensor tensor;
  Vector x;  // generic feasible point
};

Sample draw_sample(Rng& rng) {
  std::vector<Index> dims(3);
  for (auto& d : dims) d = 3 + rng.index(3);
  const Index rank = 1 + rng.index(3);
  Sample s;
  s.shape = Shape(dims, rank);
  s.tensor = DenseTensor(dims, rng.uniform_vector(product(dims)));
  const FeasibleSet set{s.shape, std::nullopt};
  s.x = project(set, rng.uniform_vector(s.shape.size()) + Vector::Constant(s.shape.size(), 0.05)).point;
  return s;
}

double rel(double num, double den) { return num / std::max(den, 1e-300); }

CheckResult make(const char* name, double tol) {
  CheckResult r;
  r.name = name;
  r.tolerance = tol;
  return r;
}

void record(CheckResult& r, double value) {
  r.measured = std::max(r.measured, std::isfinite(value) ? value : INFINITY);
  ++r.samples;
}

void finish(CheckResult& r) { r.passed = r.samples > 0 && r.measured <= r.tolerance; }

Matrix explicit_gramian(const Sample& s) {
  const Matrix j = explicit_jacobian(s.shape, s.x);
  return j.transpose() * j;
}

}  // namespace

std::vector<CheckResult> run_checks(const CheckOptions& opt) {
  const int count = opt.scale == CheckScale::tiny ? 12 : 100;
  const Rng root(opt.seed);
  std::vector<CheckResult> out;

  {
    CheckResult res = make("gradient-vs-fd", 1e-5);
    Rng rng = root.split(1);
    for (int i = 0; i < count; ++i) {
      Sample s = draw_sample(rng);
      s.x += 0.1 * rng.normal_vector(s.x.size());
      Problem problem(s.tensor, s.shape.rank);
      problem.set_gradient_fault(opt.gradient_fault);
      const Vector g = problem.value_and_gradient(s.x).grad;
      Vector fd(s.x.size());
      for (Index k = 0; k < s.x.size(); ++k) {
        const double h = 1e-6 * (1.0 + std::abs(s.x[k]));
        Vector xp = s.x, xm = s.x;
        xp[k] += h;
        xm[k] -= h;
        fd[k] = (objective_f(s.shape, xp, s.tensor) - objective_f(s.shape, xm, s.tensor)) / (2 * h);
      }
      record(res, rel((g - fd).norm(), fd.norm()));
    }
    finish(res);
    out.push_back(res);
  }

  {
    CheckResult rank_check = make("gramian-kernel-rank", 0.0);
    CheckResult basis = make("gramian-kernel-basis", 1e-10);
    CheckResult orth = make("gradient-kernel-orthogonality", 1e-10);
    Rng rng = root.split(2);
    for (int i = 0; i < count; ++i) {
      const Sample s = draw_sample(rng);
      const Index nr = s.shape.order() * s.shape.rank;
      const Matrix j = explicit_jacobian(s.shape, s.x);
      const Matrix gram = j.transpose() * j;
      const Index null_dim = gram.cols() - numerical_rank(gram, 1e-10);
      record(rank_check, static_cast<double>(std::abs(null_dim - nr)));
      const KernelBasis kb = kernel_basis(s.shape, s.x);
      const double jn = j.norm();
      const double kn = kb.K.norm();
      record(basis, rel((j * kb.K).norm(), jn * kn));
      Problem problem(s.tensor, s.shape.rank);
      problem.set_gradient_fault(opt.gradient_fault);
      const Vector g = problem.value_and_gradient(s.x).grad;
      record(orth, rel((kb.K.transpose() * g).norm(), kn * g.norm()));
    }
    for (auto* r : {&rank_check, &basis, &orth}) {
      finish(*r);
      out.push_back(*r);
    }
  }

  {
    CheckResult res = make("gramian-matrix-free", 1e-12);
    Rng rng = root.split(3);
    for (int i = 0; i < count; ++i) {
      const Sample s = draw_sample(rng);
      const Matrix gram = explicit_gramian(s);
      const GramianOperator op(s.shape, s.x);
      const Vector v = rng.normal_vector(s.x.size());
      const Vector ref = gram * v;
      record(res, rel((op.apply(v) - ref).norm(), ref.norm()));
    }
    finish(res);
    out.push_back(res);
  }

  {
    CheckResult res = make("projection-jacobian-fd", 1e-5);
    Rng rng = root.split(4);
    for (int i = 0; i < count; ++i) {
      const Sample s = draw_sample(rng);
      const FeasibleSet set{s.shape, std::nullopt};
      // Keep every entry at least 0.05 away from the kink at zero.
      Vector w = rng.uniform_vector(s.x.size());
      for (Index k = 0; k < w.size(); ++k) {
        w[k] = rng.uniform() < 0.3 ? -(0.05 + w[k]) : 0.05 + w[k];
      }
      for (Index n = 0; n < s.shape.order(); ++n) {
        for (Index r = 0; r < s.shape.rank; ++r) w[s.shape.column_offset(n, r)] = 0.5;
      }
      const ProjJacobianElement jac = proj_jacobian(set, w);
      const Vector v = rng.normal_vector(w.size()).normalized();
      const double h = 1e-6;
      const Vector fd = (project(set, w + h * v).point - project(set, w - h * v).point) / (2 * h);
      record(res, rel((jac.apply(v) - fd).norm(), std::max(fd.norm(), 1.0)));
    }
    finish(res);
    out.push_back(res);
  }

  {
    CheckResult upper = make("fbe-below-f", 1e-12);
    CheckResult sufficient = make("fbe-sufficient-decrease", 1e-12);
    Rng rng = root.split(5);
    const double alpha = 0.95;
    for (int i = 0; i < count * 10; ++i) {
      const Sample s = draw_sample(rng);
      Problem problem(s.tensor, s.shape.rank);
      problem.set_gradient_fault(opt.gradient_fault);
      const FeasibleSet set{s.shape, std::nullopt};
      const double gamma = std::pow(10.0, rng.uniform(-6.0, 0.0));
      const StepState st = fb_step(problem, set, s.x, gamma);
      const double f = objective_f(s.shape, s.x, s.tensor);
      record(upper, std::max(0.0, st.fbe - f));
      const double fz = objective_f(s.shape, st.z, s.tensor);
      if (gamma_condition(st, fz, alpha)) {
        const double bound = st.fbe - (1.0 - alpha) / (2.0 * gamma) * st.r.squaredNorm();
        record(sufficient, std::max(0.0, fz - bound));
      }
    }
    finish(upper);
    finish(sufficient);
    out.push_back(upper);
    out.push_back(sufficient);
  }

  {
    CheckResult fwd = make("hhat-vs-dense", 1e-12);
    CheckResult adj = make("hhat-transpose-vs-dense", 1e-12);
    Rng rng = root.split(6);
    for (int i = 0; i < count; ++i) {
      const Sample s = draw_sample(rng);
      Problem problem(s.tensor, s.shape.rank);
      const FeasibleSet set{s.shape, std::nullopt};
      const double gamma = std::pow(10.0, rng.uniform(-3.0, 0.0));
      const StepState st = fb_step(problem, set, s.x, gamma);
      if (st.degenerate) continue;
      const ClarkeConvention conv = i % 2 ? ClarkeConvention::one : ClarkeConvention::zero;
      const JhatOperator hat(problem, set, st, conv);
      const Matrix p = proj_jacobian(set, st.w, conv).dense();
      const Index n = s.x.size();
      const Matrix dense = Matrix::Identity(n, n) - p * (Matrix::Identity(n, n) - gamma * explicit_gramian(s));
      const Vector v = rng.normal_vector(n);
      const Vector ref = dense * v;
      const Vector ref_t = dense.transpose() * v;
      record(fwd, rel((hat.apply(v) - ref).norm(), ref.norm()));
      record(adj, rel((hat.apply_transpose(v) - ref_t).norm(), ref_t.norm()));
    }
    finish(fwd);
    finish(adj);
    out.push_back(fwd);
    out.push_back(adj);
  }

  {
    CheckResult res = make("cauchy-scale", 1e-12);
    Rng rng = root.split(7);
    for (int i = 0; i < count; ++i) {
      const Sample s = draw_sample(rng);
      const Vector g = rng.normal_vector(s.x.size());
      const double ref = g.dot(explicit_gramian(s) * g) / g.squaredNorm();
      const GramianOperator op(s.shape, s.x);
      record(res, rel(std::abs(cauchy_scale(op, g) - ref), ref));
    }
    finish(res);
    out.push_back(res);
  }
  return out;
}

bool print_checks(std::ostream& out, const std::vector<CheckResult>& results) {
  bool all = true;
  for (const auto& r : results) {
    char line[256];
    std::snprintf(line, sizeof line, "%-4s %-30s worst %.3e  tol %.1e  samples %d",
                  r.passed ? "PASS" : "FAIL", r.name.c_str(), r.measured, r.tolerance, r.samples);
    out << line << '\n';
    all = all && r.passed;
  }
  return all;
}

}  // namespace ncpd
