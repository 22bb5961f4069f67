#include "ncpd/experiments.hpp"

#include "ncpd/rng.hpp"
#include "ncpd/tensor_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <thread>

namespace ncpd {

void InstanceSpec::validate() const {
  const Shape shape(dims, rank);  // validates dims and rank
  for (Index d : dims) {
    if (zeros_per_factor > d * rank || negatives_per_factor > d * rank) {
      throw std::invalid_argument("zero/negative entry counts exceed factor size");
    }
  }
  if (zeros_per_factor < 0 || negatives_per_factor < 0) {
    throw std::invalid_argument("zero/negative entry counts must be nonnegative");
  }
  if (!(entry_hi > entry_lo) || entry_lo < 0.0) throw std::invalid_argument("invalid entry bounds");
  if (!(negative_lo < 0.0)) throw std::invalid_argument("negative_lo must be negative");
  if (perturbation_sigma < 0.0) throw std::invalid_argument("perturbation sigma must be nonnegative");
}

namespace {

// `count` distinct positions in [0, n), partial Fisher-Yates.
std::vector<Index> sample_positions(Rng& rng, Index n, Index count) {
  std::vector<Index> pool(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  for (Index i = 0; i < count; ++i) {
    const Index j = i + rng.index(n - i);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(count));
  return pool;
}

Matrix uniform_factor(Rng& rng, Index rows, Index cols, double lo, double hi) {
  Matrix a(rows, cols);
  for (Index r = 0; r < cols; ++r) {
    for (Index i = 0; i < rows; ++i) a(i, r) = rng.uniform(lo, hi);
  }
  return a;
}

bool has_zero_column(const Matrix& a) {
  for (Index r = 0; r < a.cols(); ++r) {
    if (a.col(r).cwiseAbs().maxCoeff() == 0.0) return true;
  }
  return false;
}

constexpr int kZeroPatternRetries = 100;

}  // namespace

ExactInstance gen_exact_instance(const InstanceSpec& spec) {
  spec.validate();
  Rng rng = Rng(spec.seed).split(0);
  const Shape shape(spec.dims, spec.rank);
  Vector x(shape.size());
  Vector lambda = Vector::Ones(spec.rank);
  for (Index n = 0; n < shape.order(); ++n) {
    const Matrix base = uniform_factor(rng, shape.dim(n), spec.rank, spec.entry_lo, spec.entry_hi);
    Matrix a = base;
    int attempt = 0;
    for (;; ++attempt) {
      if (attempt == kZeroPatternRetries) {
        throw std::runtime_error("instance generator could not avoid an all-zero column");
      }
      a = base;
      for (Index p : sample_positions(rng, a.size(), spec.zeros_per_factor)) a.data()[p] = 0.0;
      if (!has_zero_column(a)) break;
    }
    for (Index r = 0; r < spec.rank; ++r) {
      const double norm = a.col(r).norm();
      a.col(r) /= norm;
      lambda[r] *= norm;
    }
    factor_view(shape, x, n) = a;
  }
  weights_view(shape, x) = lambda;
  return {tensor_from_cpd(shape, x), std::move(x)};
}

InexactInstance gen_inexact_instance(const InstanceSpec& spec) {
  spec.validate();
  Rng rng = Rng(spec.seed).split(0);
  const Shape shape(spec.dims, spec.rank);
  InexactInstance out;
  Vector x(shape.size());
  for (Index n = 0; n < shape.order(); ++n) {
    Matrix a = uniform_factor(rng, shape.dim(n), spec.rank, spec.entry_lo, spec.entry_hi);
    for (Index p : sample_positions(rng, a.size(), spec.negatives_per_factor)) {
      a.data()[p] = spec.negative_lo * (1.0 - rng.uniform());  // in [negative_lo, 0)
    }
    factor_view(shape, x, n) = a;
    out.generating_factors.push_back(std::move(a));
  }
  weights_view(shape, x).setOnes();
  out.tensor = tensor_from_cpd(shape, x);
  return out;
}

Vector perturb_solution(const Shape& shape, const Vector& reference, std::uint64_t seed, double sigma) {
  if (sigma == 0.0) return reference;
  const FeasibleSet set{shape, std::nullopt, 1e-10};
  const Rng rng = Rng(seed).split(1);
  const double scale = sigma * reference.norm() / std::sqrt(static_cast<double>(shape.size()));
  constexpr int kMaxDraws = 20;
  for (int draw = 0; draw < kMaxDraws; ++draw) {
    Rng sub = rng.split(static_cast<std::uint64_t>(draw));
    Vector x0 = project(set, reference + scale * sub.normal_vector(shape.size())).point;
    const double err = matched_relative_error(shape, x0, reference);
    if (err >= 0.02 && err <= 0.3) return x0;
  }
  throw std::runtime_error("perturb_solution: no draw within the target error band");
}

Vector random_feasible_point(const Shape& shape, std::uint64_t seed) {
  Rng rng = Rng(seed).split(2);
  const FeasibleSet set{shape, std::nullopt, 1e-10};
  return project(set, rng.uniform_vector(shape.size())).point;
}

double slope_error_floor() { return 1e-12; }

Slope convergence_slope(std::span<const double> errors, double floor) {
  std::vector<double> usable;
  for (double e : errors) {
    if (std::isfinite(e) && e > floor) usable.push_back(e);
  }
  if (usable.size() < 3) return {};
  const std::size_t n = usable.size();
  const double prev = std::log(usable[n - 2]) - std::log(usable[n - 3]);
  const double last = std::log(usable[n - 1]) - std::log(usable[n - 2]);
  if (prev == 0.0) return {};
  return {last / prev, true};
}

GradientCount gradient_count_to_threshold(const SolverTrace& trace, double f_target) {
  if (trace.records.empty()) throw std::invalid_argument("empty trace");
  for (const auto& rec : trace.records) {
    if (rec.fz <= f_target) return {rec.counts.grad, true};
  }
  return {trace.records.back().counts.grad, false};
}

Quartiles quartiles(std::vector<double> values) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (values.empty()) return {nan, nan, nan};
  std::sort(values.begin(), values.end());
  auto at = [&values](double p) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
  };
  return {at(0.25), at(0.5), at(0.75)};
}

Histogram histogram(std::span<const double> values, double lo, double hi, Index bins) {
  Histogram h;
  h.lo = lo;
  h.width = (hi - lo) / static_cast<double>(bins);
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    if (v < lo) {
      ++h.below;
    } else if (v >= hi) {
      ++h.above;
    } else {
      const auto b = std::min<Index>(static_cast<Index>((v - lo) / h.width), bins - 1);
      ++h.counts[static_cast<std::size_t>(b)];
    }
  }
  return h;
}

bool fbe_monotone_after_last_halving(const SolverTrace& trace, double rel_tol) {
  const auto& recs = trace.records;
  if (recs.empty()) return true;
  std::size_t start = 0;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (recs[i].gamma_halvings > 0) start = i;
  }
  const double tol = rel_tol * std::abs(recs[start].fbe);
  for (std::size_t i = start + 1; i < recs.size(); ++i) {
    if (recs[i].fbe > recs[i - 1].fbe + tol) return false;
  }
  return true;
}

bool unit_tau_on_final_steps(const SolverTrace& trace, std::size_t count) {
  std::size_t seen = 0;
  for (auto it = trace.records.rbegin(); it != trace.records.rend() && seen < count; ++it) {
    if (it->kind == StepKind::stop) continue;
    if (it->kind != StepKind::gauss_newton || it->tau != 1.0) return false;
    ++seen;
  }
  return seen == count;
}

namespace {

template <class Fn>
void parallel_for(Index n, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<Index>(threads, std::max<Index>(n, 1)));
  if (threads <= 1) {
    for (Index i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<Index> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (Index i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

ExperimentReport run_experiment_quadratic(const ExperimentOptions& opt) {
  ExperimentReport report;
  report.name = "quadratic";
  report.base_seed = opt.base_seed;
  report.quadratic.resize(static_cast<std::size_t>(opt.runs));
  parallel_for(opt.runs, opt.threads, [&](Index i) {
    QuadraticRun& run = report.quadratic[static_cast<std::size_t>(i)];
    run.seed = opt.base_seed + static_cast<std::uint64_t>(i);
    InstanceSpec spec = opt.instance;
    spec.seed = run.seed;
    const ExactInstance inst = gen_exact_instance(spec);
    const Problem problem(inst.tensor, spec.rank);
    const Vector x0 = perturb_solution(problem.shape(), inst.reference, run.seed, spec.perturbation_sigma);
    SolverConfig cfg = opt.solver;
    cfg.seed = run.seed;
    SolverResult res = panoc_solve(problem, x0, cfg, &inst.reference);

    run.converged = res.reason == Termination::tolerance;
    run.reason = res.reason;
    run.iterations = res.iterations;
    run.final_f = res.f;
    run.initial_error = res.trace.records.front().error.value_or(0.0);
    run.final_error = matched_relative_error(problem.shape(), res.z, inst.reference);
    std::vector<double> errors;
    for (const auto& rec : res.trace.records) errors.push_back(rec.error.value_or(0.0));
    run.slope = convergence_slope(errors, slope_error_floor());
    run.gamma_halvings = res.trace.total_gamma_halvings();
    run.trace = std::move(res.trace);
  });
  return report;
}

ExperimentReport run_experiment_compare(const ExperimentOptions& opt) {
  ExperimentReport report;
  report.name = "compare";
  report.base_seed = opt.base_seed;
  report.compare.resize(static_cast<std::size_t>(opt.runs));
  parallel_for(opt.runs, opt.threads, [&](Index i) {
    CompareRun& run = report.compare[static_cast<std::size_t>(i)];
    run.seed = opt.base_seed + static_cast<std::uint64_t>(i);
    InstanceSpec spec = opt.instance;
    spec.seed = run.seed;
    const InexactInstance inst = gen_inexact_instance(spec);
    const Shape shape(spec.dims, spec.rank);
    const Vector x0 = random_feasible_point(shape, run.seed);
    SolverConfig cfg = opt.solver;
    cfg.seed = run.seed;
    {
      const Problem problem(inst.tensor, spec.rank);
      run.panoc = panoc_solve(problem, x0, cfg);
    }
    {
      const Problem problem(inst.tensor, spec.rank);
      run.pgd = pgd_solve(problem, x0, cfg);
    }
    run.panoc_count = gradient_count_to_threshold(run.panoc.trace, 1.01 * run.panoc.f);
    run.pgd_count = gradient_count_to_threshold(run.pgd.trace, 1.01 * run.pgd.f);
    const double lo = std::min(run.panoc.f, run.pgd.f);
    run.divergent_optima = std::abs(run.panoc.f - run.pgd.f) > 0.05 * lo;
  });
  return report;
}

double ExperimentReport::median_slope() const {
  std::vector<double> v;
  for (const auto& r : quadratic) {
    if (r.converged && r.slope.defined) v.push_back(r.slope.q);
  }
  return quartiles(v).median;
}

double ExperimentReport::median_panoc_gradients() const {
  std::vector<double> v;
  for (const auto& r : compare) v.push_back(static_cast<double>(r.panoc_count.count));
  return quartiles(v).median;
}

double ExperimentReport::median_pgd_gradients() const {
  std::vector<double> v;
  for (const auto& r : compare) v.push_back(static_cast<double>(r.pgd_count.count));
  return quartiles(v).median;
}

double ExperimentReport::panoc_win_fraction() const {
  Index eligible = 0;
  Index wins = 0;
  for (const auto& r : compare) {
    if (r.divergent_optima) continue;
    ++eligible;
    if (r.panoc_count.count < r.pgd_count.count) ++wins;
  }
  return eligible ? static_cast<double>(wins) / static_cast<double>(eligible)
                  : std::numeric_limits<double>::quiet_NaN();
}

void ExperimentReport::write_csv(std::ostream& out) const {
  if (name == "quadratic") {
    out << "seed,converged,reason,iterations,final_f,initial_error,final_error,slope,slope_defined,"
           "gamma_halvings,unit_tau_last3,fbe_monotone\n";
    for (const auto& r : quadratic) {
      out << r.seed << ',' << int(r.converged) << ',' << to_string(r.reason) << ',' << r.iterations
          << ',' << format_double(r.final_f) << ',' << format_double(r.initial_error) << ','
          << format_double(r.final_error) << ',' << format_double(r.slope.q) << ','
          << int(r.slope.defined) << ',' << r.gamma_halvings << ','
          << int(unit_tau_on_final_steps(r.trace)) << ','
          << int(fbe_monotone_after_last_halving(r.trace)) << '\n';
    }
  } else {
    out << "seed,panoc_reason,pgd_reason,panoc_iterations,pgd_iterations,panoc_final_f,pgd_final_f,"
           "panoc_gradients,pgd_gradients,panoc_reached,pgd_reached,divergent_optima\n";
    for (const auto& r : compare) {
      out << r.seed << ',' << to_string(r.panoc.reason) << ',' << to_string(r.pgd.reason) << ','
          << r.panoc.iterations << ',' << r.pgd.iterations << ',' << format_double(r.panoc.f) << ','
          << format_double(r.pgd.f) << ',' << r.panoc_count.count << ',' << r.pgd_count.count << ','
          << int(r.panoc_count.reached) << ',' << int(r.pgd_count.reached) << ','
          << int(r.divergent_optima) << '\n';
    }
  }
}

namespace {

nlohmann::json to_json(const Quartiles& q) {
  return {{"q1", q.q1}, {"median", q.median}, {"q3", q.q3}};
}

nlohmann::json to_json(const Histogram& h) {
  return {{"lo", h.lo}, {"width", h.width}, {"counts", h.counts}, {"below", h.below}, {"above", h.above}};
}

double max_or_one(const std::vector<double>& v) {
  double m = 1.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

}  // namespace

void ExperimentReport::write_json(std::ostream& out) const {
  nlohmann::json j;
  j["experiment"] = name;
  j["base_seed"] = base_seed;
  j["runs"] = runs();
  if (name == "quadratic") {
    std::vector<double> slopes;
    Index converged = 0;
    Index steep = 0;
    for (const auto& r : quadratic) {
      if (!r.converged) continue;
      ++converged;
      if (r.slope.defined) {
        slopes.push_back(r.slope.q);
        if (r.slope.q >= 1.5) ++steep;
      }
    }
    j["converged"] = converged;
    j["slopes_defined"] = static_cast<Index>(slopes.size());
    j["slope"] = to_json(quartiles(slopes));
    j["median_slope"] = median_slope();
    j["fraction_slope_ge_1_5"] = converged ? static_cast<double>(steep) / static_cast<double>(converged) : 0.0;
    j["slope_histogram"] = to_json(histogram(slopes, 0.0, 3.0, 30));
  } else {
    std::vector<double> pa;
    std::vector<double> pg;
    Index flagged = 0;
    for (const auto& r : compare) {
      pa.push_back(static_cast<double>(r.panoc_count.count));
      pg.push_back(static_cast<double>(r.pgd_count.count));
      if (r.divergent_optima) ++flagged;
    }
    const double hi = std::max(max_or_one(pa), max_or_one(pg)) + 1.0;
    j["panoc_gradients"] = to_json(quartiles(pa));
    j["pgd_gradients"] = to_json(quartiles(pg));
    j["median_panoc_gradients"] = median_panoc_gradients();
    j["median_pgd_gradients"] = median_pgd_gradients();
    j["panoc_win_fraction"] = panoc_win_fraction();
    j["divergent_optima_runs"] = flagged;
    j["panoc_histogram"] = to_json(histogram(pa, 0.0, hi, 20));
    j["pgd_histogram"] = to_json(histogram(pg, 0.0, hi, 20));
  }
  out << j.dump(2) << '\n';
}

void write_report_files(const ExperimentReport& report, const std::string& prefix) {
  {
    std::ofstream csv(prefix + ".csv");
    if (!csv) throw std::runtime_error("cannot write '" + prefix + ".csv'");
    report.write_csv(csv);
  }
  std::ofstream json(prefix + ".json");
  if (!json) throw std::runtime_error("cannot write '" + prefix + ".json'");
  report.write_json(json);
}

}  // namespace ncpd
