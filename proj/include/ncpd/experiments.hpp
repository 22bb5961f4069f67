#pragma once

#include "ncpd/panoc.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ncpd {

struct InstanceSpec {
  std::vector<Index> dims{10, 10, 10};
  Index rank = 5;
  Index zeros_per_factor = 10;
  Index negatives_per_factor = 10;
  double entry_lo = 0.0;
  double entry_hi = 1.0;
  double negative_lo = -0.01;
  double perturbation_sigma = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ExactInstance {
  DenseTensor tensor;
  Vector reference;  // feasible x* with F(x*) = 0
};

/// U(entry_lo, entry_hi) factors with `zeros_per_factor` entries zeroed per
/// factor, normalized so that the column norms move into the weights.
ExactInstance gen_exact_instance(const InstanceSpec& spec);

struct InexactInstance {
  DenseTensor tensor;
  std::vector<Matrix> generating_factors;  // unnormalized, with negative entries
};

/// Same construction, but `negatives_per_factor` entries per factor are
/// replaced by U(negative_lo, 0) draws, so no exact nonnegative CPD exists.
InexactInstance gen_inexact_instance(const InstanceSpec& spec);

/// project(x* + sigma ||x*|| / sqrt(d + R) * n), redrawn until the matched
/// relative error lies in [0.02, 0.3]. Throws after 20 draws. sigma == 0
/// returns x* unchanged.
Vector perturb_solution(const Shape& shape, const Vector& reference, std::uint64_t seed,
                        double sigma = 0.1);

/// project(uniform [0, 1) vector).
Vector random_feasible_point(const Shape& shape, std::uint64_t seed);

struct Slope {
  double q = 0.0;
  bool defined = false;
};

/// Ratio of the last two log-decrements among errors strictly above `floor`.
Slope convergence_slope(std::span<const double> errors, double floor);

/// Relative errors below this are treated as rounding noise.
double slope_error_floor();

struct GradientCount {
  std::int64_t count = 0;
  bool reached = false;
};

/// Cumulative gradient evaluations at the first record with f(z) <= f_target.
GradientCount gradient_count_to_threshold(const SolverTrace& trace, double f_target);

struct Quartiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

/// Linear-interpolation quartiles; NaN everywhere if `values` is empty.
Quartiles quartiles(std::vector<double> values);

struct Histogram {
  double lo = 0.0;
  double width = 0.0;
  std::vector<Index> counts;
  Index below = 0;
  Index above = 0;
};

Histogram histogram(std::span<const double> values, double lo, double hi, Index bins);

struct QuadraticRun {
  std::uint64_t seed = 0;
  bool converged = false;
  Termination reason = Termination::tolerance;
  Index iterations = 0;
  double final_f = 0.0;
  double initial_error = 0.0;
  double final_error = 0.0;
  Slope slope;
  int gamma_halvings = 0;
  SolverTrace trace;
};

struct CompareRun {
  std::uint64_t seed = 0;
  SolverResult panoc;
  SolverResult pgd;
  GradientCount panoc_count;
  GradientCount pgd_count;
  bool divergent_optima = false;  // final f values differ by more than 5%
};

struct ExperimentReport {
  std::string name;
  std::uint64_t base_seed = 0;
  std::vector<QuadraticRun> quadratic;
  std::vector<CompareRun> compare;

  Index runs() const {
    return static_cast<Index>(name == "quadratic" ? quadratic.size() : compare.size());
  }
  /// Headline numbers printed by the CLI and stored in the JSON.
  double median_slope() const;
  double median_panoc_gradients() const;
  double median_pgd_gradients() const;
  /// Fraction of non-flagged paired runs where PANOC needed fewer gradients.
  double panoc_win_fraction() const;

  void write_csv(std::ostream& out) const;
  void write_json(std::ostream& out) const;
};

struct ExperimentOptions {
  Index runs = 50;
  std::uint64_t base_seed = 1;
  SolverConfig solver;
  InstanceSpec instance;
  /// 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;
};

/// Exact instances, ~1-digit starts, PANOC with reference tracking.
ExperimentReport run_experiment_quadratic(const ExperimentOptions& opt);

/// Inexact instances, shared random start, PANOC vs projected gradient.
ExperimentReport run_experiment_compare(const ExperimentOptions& opt);

/// Writes <prefix>.csv and <prefix>.json.
void write_report_files(const ExperimentReport& report, const std::string& prefix);

// Trace predicates shared by the acceptance suite and the report.

/// FBE nonincreasing (up to rel_tol * |first value|) from the last record
/// with a gamma halving onward.
bool fbe_monotone_after_last_halving(const SolverTrace& trace, double rel_tol = 1e-12);

/// The last `count` steps before termination were unit-stepsize GN steps.
bool unit_tau_on_final_steps(const SolverTrace& trace, std::size_t count = 3);

}  // namespace ncpd
