#pragma once

#include "ncpd/gn_solver.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ncpd {

struct SolverConfig {
  double alpha = 0.95;
  double beta = 0.5;
  double epsilon = 1e-20;
  Index max_iters = 2000;
  int max_tau_halvings = 5;
  /// Consecutive gamma halvings allowed before the run is declared stagnant.
  int max_gamma_halvings = 60;
  double lipschitz_fd_step = 1e-6;
  bool cauchy_floor = true;
  bool cauchy_reciprocal = true;
  /// false: pure proximal-gradient iteration (x+ = z).
  bool use_direction = true;
  CgSettings cg;
  ClarkeConvention convention = ClarkeConvention::zero;
  std::uint64_t seed = 0;
  std::optional<double> box_bound;
  double feasibility_tol = 1e-10;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

enum class StepKind { gauss_newton, proximal_gradient, stop };
const char* to_string(StepKind kind);

struct IterationRecord {
  Index k = 0;
  double fz = 0.0;   // f at the projected point z^k
  double fx = 0.0;   // f at x^k
  double fbe = 0.0;  // FBE at x^k with the gamma below
  double rnorm = 0.0;
  double gamma = 0.0;
  double tau = 0.0;  // accepted linesearch parameter (0 for a proximal-gradient step)
  int gamma_halvings = 0;
  int tau_halvings = 0;
  StepKind kind = StepKind::stop;
  EvalCounts counts;  // cumulative, at the time z^k became available
  Index cg_iterations = 0;
  double cg_residual = 0.0;
  bool cg_converged = false;
  std::optional<double> error;  // relative, permutation-matched ||x^k - x*|| / ||x*||
};

struct SolverTrace {
  std::vector<IterationRecord> records;
  bool has_error() const { return !records.empty() && records.front().error.has_value(); }
  int total_gamma_halvings() const;
};

void write_trace_csv(std::ostream& out, const SolverTrace& trace);

enum class Termination { tolerance, max_iters, stagnation };
const char* to_string(Termination t);

struct SolverResult {
  Vector z;
  double f = 0.0;
  Termination reason = Termination::tolerance;
  Index iterations = 0;
  double gamma = 0.0;
  double lipschitz = 0.0;
  SolverTrace trace;
};

class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& what, SolverTrace trace)
      : std::runtime_error(what), trace(std::move(trace)) {}
  SolverTrace trace;
};

using GradientFn = std::function<Vector(const Vector&)>;

/// ||grad(x0 + delta u) - grad(x0)|| / delta for a seeded random unit u and
/// delta = fd_step * (1 + ||x0||). Floored at 1e-12.
double estimate_lipschitz(const GradientFn& grad, const Vector& x0, const Vector& grad0,
                          double fd_step, std::uint64_t seed);
double estimate_lipschitz(const Problem& problem, const Vector& x0, const SolverConfig& cfg);

/// Relative distance to a reference after matching rank-1 terms greedily by
/// summed factor inner products.
double matched_relative_error(const Shape& shape, const Vector& x, const Vector& reference);

/// Reorders the rank-1 terms of x to align with reference (same greedy rule).
Vector align_to_reference(const Shape& shape, const Vector& x, const Vector& reference);

/// The tau = 0 end of the linesearch segment.
inline const Vector& pgd_step_fallback(const StepState& s) { return s.z; }

/// Proximal Gauss-Newton linesearch on the forward-backward envelope. x0 is
/// projected first. If `reference` is given, every record carries its error.
SolverResult panoc_solve(const Problem& problem, const Vector& x0, const SolverConfig& cfg,
                         const Vector* reference = nullptr);

/// Projected gradient descent with the same stepsize control and trace.
SolverResult pgd_solve(const Problem& problem, const Vector& x0, const SolverConfig& cfg,
                       const Vector* reference = nullptr);

}  // namespace ncpd
