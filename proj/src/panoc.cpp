#include "ncpd/panoc.hpp"

#include "ncpd/rng.hpp"
#include "ncpd/tensor_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace ncpd {

void SolverConfig::validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
  };
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  require(beta > 0.0 && beta < 1.0, "beta must lie in (0, 1)");
  require(epsilon >= 0.0, "epsilon must be nonnegative");
  require(max_iters >= 0, "max_iters must be nonnegative");
  require(max_tau_halvings >= 0, "max_tau_halvings must be nonnegative");
  require(max_gamma_halvings >= 1, "max_gamma_halvings must be positive");
  require(lipschitz_fd_step > 0.0, "lipschitz_fd_step must be positive");
  require(cg.tol_min > 0.0 && cg.forcing_cap >= cg.tol_min, "invalid CG tolerances");
  require(cg.maxit >= 0, "cg maxit must be nonnegative");
  require(cg.damping >= 0.0, "cg damping must be nonnegative");
  require(!box_bound || *box_bound > 0.0, "box bound must be positive");
  require(feasibility_tol > 0.0, "feasibility tolerance must be positive");
}

const char* to_string(StepKind kind) {
  switch (kind) {
    case StepKind::gauss_newton: return "gn";
    case StepKind::proximal_gradient: return "pg";
    case StepKind::stop: return "stop";
  }
  return "?";
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::tolerance: return "tolerance";
    case Termination::max_iters: return "max-iters";
    case Termination::stagnation: return "stagnation";
  }
  return "?";
}

int SolverTrace::total_gamma_halvings() const {
  int total = 0;
  for (const auto& r : records) total += r.gamma_halvings;
  return total;
}

void write_trace_csv(std::ostream& out, const SolverTrace& trace) {
  const bool with_err = trace.has_error();
  out << "k,f,fbe,rnorm,gamma,tau,gh,th,kind,fevals,gevals,gapplies" << (with_err ? ",err" : "")
      << '\n';
  for (const auto& r : trace.records) {
    out << r.k << ',' << format_double(r.fz) << ',' << format_double(r.fbe) << ','
        << format_double(r.rnorm) << ',' << format_double(r.gamma) << ',' << format_double(r.tau)
        << ',' << r.gamma_halvings << ',' << r.tau_halvings << ',' << to_string(r.kind) << ','
        << r.counts.f << ',' << r.counts.grad << ',' << r.counts.gramian;
    if (with_err) out << ',' << format_double(r.error.value_or(std::nan("")));
    out << '\n';
  }
}

double estimate_lipschitz(const GradientFn& grad, const Vector& x0, const Vector& grad0,
                          double fd_step, std::uint64_t seed) {
  Rng rng(seed);
  Vector u = rng.normal_vector(x0.size());
  u.normalize();
  const double delta = fd_step * (1.0 + x0.norm());
  const Vector g1 = grad(x0 + delta * u);
  const double lip = (g1 - grad0).norm() / delta;
  if (!std::isfinite(lip)) throw std::runtime_error("Lipschitz estimate is not finite");
  return std::max(lip, 1e-12);
}

double estimate_lipschitz(const Problem& problem, const Vector& x0, const SolverConfig& cfg) {
  auto grad = [&problem](const Vector& x) { return problem.value_and_gradient(x).grad; };
  return estimate_lipschitz(grad, x0, grad(x0), cfg.lipschitz_fd_step, cfg.seed);
}

namespace {

// Greedy assignment: perm[s] = index of the term of x matched to reference term s.
std::vector<Index> greedy_match(const Shape& shape, const Vector& x, const Vector& reference) {
  const Index rank = shape.rank;
  Matrix sim = Matrix::Zero(rank, rank);  // sim(r, s): term r of x vs term s of reference
  for (Index n = 0; n < shape.order(); ++n) {
    sim += factor_view(shape, x, n).transpose() * factor_view(shape, reference, n);
  }
  std::vector<Index> perm(static_cast<std::size_t>(rank), -1);
  std::vector<bool> used_x(static_cast<std::size_t>(rank), false);
  for (Index step = 0; step < rank; ++step) {
    double best = -std::numeric_limits<double>::infinity();
    Index br = 0;
    Index bs = 0;
    for (Index r = 0; r < rank; ++r) {
      if (used_x[static_cast<std::size_t>(r)]) continue;
      for (Index s = 0; s < rank; ++s) {
        if (perm[static_cast<std::size_t>(s)] >= 0) continue;
        if (sim(r, s) > best) {
          best = sim(r, s);
          br = r;
          bs = s;
        }
      }
    }
    used_x[static_cast<std::size_t>(br)] = true;
    perm[static_cast<std::size_t>(bs)] = br;
  }
  return perm;
}

}  // namespace

Vector align_to_reference(const Shape& shape, const Vector& x, const Vector& reference) {
  const std::vector<Index> perm = greedy_match(shape, x, reference);
  Vector out(x.size());
  for (Index s = 0; s < shape.rank; ++s) {
    const Index r = perm[static_cast<std::size_t>(s)];
    for (Index n = 0; n < shape.order(); ++n) {
      out.segment(shape.column_offset(n, s), shape.dim(n)) =
          x.segment(shape.column_offset(n, r), shape.dim(n));
    }
    out[shape.weights_offset() + s] = x[shape.weights_offset() + r];
  }
  return out;
}

double matched_relative_error(const Shape& shape, const Vector& x, const Vector& reference) {
  return (align_to_reference(shape, x, reference) - reference).norm() / reference.norm();
}

namespace {

class Driver {
public:
  Driver(const Problem& problem, const SolverConfig& cfg, const Vector* reference)
      : problem_(problem),
        cfg_(cfg),
        set_{problem.shape(), cfg.box_bound, cfg.feasibility_tol},
        reference_(reference) {}

  SolverResult run(const Vector& x0);

private:
  ValueAndGradient cached(const StepState& s) const { return {s.fx, s.grad}; }

  [[noreturn]] void fail(const std::string& what) { throw SolverError(what, std::move(result_.trace)); }

  SolverResult finish(const StepState& s, double fz, Termination reason, Index k) {
    result_.z = s.z;
    result_.f = fz;
    result_.reason = reason;
    result_.iterations = k;
    result_.gamma = s.gamma;
    return std::move(result_);
  }

  const Problem& problem_;
  const SolverConfig& cfg_;
  FeasibleSet set_;
  const Vector* reference_;
  SolverResult result_;
};

SolverResult Driver::run(const Vector& x0) {
  if (!x0.allFinite()) throw std::invalid_argument("starting point is not finite");
  const double alpha = cfg_.alpha;
  Vector x = project(set_, x0).point;

  const ValueAndGradient vg0 = problem_.value_and_gradient(x);
  auto grad = [this](const Vector& v) { return problem_.value_and_gradient(v).grad; };
  result_.lipschitz = estimate_lipschitz(grad, x, vg0.grad, cfg_.lipschitz_fd_step, cfg_.seed);

  StepState s = fb_step(set_, x, alpha / result_.lipschitz, vg0);
  std::optional<double> fz_known;
  Index k = 0;
  int gamma_halvings = 0;  // within the current iteration

  for (;;) {
    // Stepsize test at the current iterate.
    double fz = fz_known ? *fz_known : problem_.objective(s.z);
    int consecutive = 0;
    if (!std::isfinite(s.fx) || !s.grad.allFinite()) fail("non-finite objective or gradient");
    while (!gamma_condition(s, fz, alpha)) {
      if (++consecutive > cfg_.max_gamma_halvings) {
        return finish(s, fz, Termination::stagnation, k);
      }
      ++gamma_halvings;
      s = fb_step(set_, s.x, s.gamma / 2.0, cached(s));
      fz = problem_.objective(s.z);
    }
    fz_known.reset();
    if (!std::isfinite(s.fbe) || !std::isfinite(fz)) fail("non-finite objective");

    IterationRecord rec;
    rec.k = k;
    rec.fz = fz;
    rec.fx = s.fx;
    rec.fbe = s.fbe;
    rec.rnorm = s.r.norm();
    rec.gamma = s.gamma;
    rec.gamma_halvings = gamma_halvings;
    rec.counts = problem_.counts();
    if (reference_) rec.error = matched_relative_error(set_.shape, s.x, *reference_);

    if (s.r.squaredNorm() / s.gamma <= cfg_.epsilon) {
      result_.trace.records.push_back(rec);
      return finish(s, fz, Termination::tolerance, k);
    }
    if (k >= cfg_.max_iters) {
      result_.trace.records.push_back(rec);
      return finish(s, fz, Termination::max_iters, k);
    }

    DirectionResult dir;
    if (cfg_.use_direction) {
      dir = solve_direction(problem_, set_, s, cfg_.cg, cfg_.convention);
      rec.cg_iterations = dir.report.iterations;
      rec.cg_residual = dir.report.relative_residual;
      rec.cg_converged = dir.report.converged;
    }

    const double decrease = (1.0 - alpha) / (2.0 * s.gamma) * cfg_.beta * s.r.squaredNorm();
    double tau = 1.0;
    int tau_halvings = 0;
    bool restart = false;
    StepState next;
    double next_fz = 0.0;
    bool fallback = false;
    for (;;) {
      fallback = !dir.ok || tau_halvings > cfg_.max_tau_halvings;
      const Vector xp = fallback ? Vector(pgd_step_fallback(s))
                                 : Vector((1.0 - tau) * s.z + tau * (s.x + dir.d));
      next = fb_step(problem_, set_, xp, s.gamma);
      const GammaTest test = gamma_condition(problem_, next, alpha);
      if (!std::isfinite(next.fbe) || !std::isfinite(test.fz)) {
        if (fallback) fail("non-finite objective at proximal-gradient step");
        // Treat an overflowing trial point as a failed decrease test.
        ++tau_halvings;
        tau /= 2.0;
        continue;
      }
      if (!test.pass) {
        ++gamma_halvings;
        s = fb_step(set_, s.x, s.gamma / 2.0, cached(s));
        restart = true;
        break;
      }
      if (!fallback && next.fbe > s.fbe - decrease) {
        ++tau_halvings;
        tau /= 2.0;
        continue;
      }
      next_fz = test.fz;
      break;
    }
    if (restart) continue;

    rec.tau = fallback ? 0.0 : tau;
    rec.tau_halvings = tau_halvings;
    rec.kind = fallback ? StepKind::proximal_gradient : StepKind::gauss_newton;
    result_.trace.records.push_back(rec);

    s = std::move(next);
    fz_known = next_fz;
    gamma_halvings = 0;
    ++k;

    if (cfg_.cauchy_floor && s.grad.squaredNorm() > 0.0) {
      const double eta = cauchy_scale(problem_.gramian(s.x), s.grad, cfg_.cauchy_reciprocal);
      if (std::isfinite(eta) && eta > s.gamma) {
        s = fb_step(set_, s.x, eta, cached(s));
        fz_known.reset();
      }
    }
  }
}

}  // namespace

SolverResult panoc_solve(const Problem& problem, const Vector& x0, const SolverConfig& cfg,
                         const Vector* reference) {
  cfg.validate();
  if (x0.size() != problem.shape().size()) throw std::invalid_argument("starting point has wrong length");
  if (reference && reference->size() != x0.size()) {
    throw std::invalid_argument("reference point has wrong length");
  }
  return Driver(problem, cfg, reference).run(x0);
}

SolverResult pgd_solve(const Problem& problem, const Vector& x0, const SolverConfig& cfg,
                       const Vector* reference) {
  SolverConfig pg = cfg;
  pg.use_direction = false;
  pg.max_tau_halvings = 0;
  return panoc_solve(problem, x0, pg, reference);
}

}  // namespace ncpd
