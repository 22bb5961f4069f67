#include "ncpd/config.hpp"
#include "ncpd/diagnostics.hpp"
#include "ncpd/experiments.hpp"
#include "ncpd/tensor_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <string>

namespace {

using namespace ncpd;

struct SolverFlags {
  std::string config_path;
  bool pgd_only = false;
  bool no_cauchy_floor = false;
  bool cauchy_reciprocal = false;
  bool cauchy_rayleigh = false;
  int convention = -1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON overlay for solver/instance settings")
        ->check(CLI::ExistingFile);
    cmd->add_flag("--pgd-only", pgd_only, "Disable the Gauss-Newton direction");
    cmd->add_flag("--no-cauchy-floor", no_cauchy_floor, "Disable the gamma floor heuristic");
    cmd->add_flag("--cauchy-reciprocal", cauchy_reciprocal,
                  "Floor gamma at ||g||^2 / g^T G g (the default)");
    cmd->add_flag("--cauchy-rayleigh", cauchy_rayleigh, "Floor gamma at g^T G g / ||g||^2");
    cmd->add_option("--convention", convention, "Orthant Jacobian value at w_i = 0")
        ->check(CLI::IsMember({0, 1}));
  }

  ConfigOverlay resolve() const {
    ConfigOverlay cfg = config_path.empty() ? ConfigOverlay{} : load_config_file(config_path);
    if (pgd_only) cfg.solver.use_direction = false;
    if (no_cauchy_floor) cfg.solver.cauchy_floor = false;
    if (cauchy_reciprocal && cauchy_rayleigh) {
      throw ConfigError("--cauchy-reciprocal and --cauchy-rayleigh are exclusive");
    }
    if (cauchy_reciprocal) cfg.solver.cauchy_reciprocal = true;
    if (cauchy_rayleigh) cfg.solver.cauchy_reciprocal = false;
    if (convention >= 0) cfg.solver.convention = static_cast<ClarkeConvention>(convention);
    cfg.solver.validate();
    return cfg;
  }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

int cmd_decompose(const std::string& tensor_path, Index rank, std::uint64_t seed,
                  const std::string& out, const SolverFlags& flags) {
  const ConfigOverlay cfg = flags.resolve();
  const DenseTensor tensor = read_tensor_file(tensor_path);
  const Problem problem(tensor, rank);
  const Vector x0 = random_feasible_point(problem.shape(), seed);
  SolverConfig solver = cfg.solver;
  solver.seed = seed;

  int code = 0;
  SolverResult res;
  try {
    res = solver.use_direction ? panoc_solve(problem, x0, solver) : pgd_solve(problem, x0, solver);
  } catch (const SolverError& e) {
    std::ofstream trace(out + ".trace.csv");
    write_trace_csv(trace, e.trace);
    throw;
  }

  const Shape& shape = problem.shape();
  for (Index n = 0; n < shape.order(); ++n) {
    write_matrix_file(out + ".factor" + std::to_string(n) + ".ten", Matrix(factor_view(shape, res.z, n)));
  }
  write_matrix_file(out + ".lambda.ten", Matrix(weights_view(shape, res.z)));
  {
    std::ofstream trace(out + ".trace.csv");
    if (!trace) throw std::runtime_error("cannot write '" + out + ".trace.csv'");
    write_trace_csv(trace, res.trace);
  }
  const EvalCounts counts = problem.counts();
  nlohmann::json summary = {
      {"input", tensor_path},
      {"dims", tensor.dims()},
      {"rank", rank},
      {"seed", seed},
      {"final_f", res.f},
      {"relative_residual", std::sqrt(2.0 * res.f) / std::max(tensor.frobenius_norm(), 1e-300)},
      {"iterations", res.iterations},
      {"termination", to_string(res.reason)},
      {"gamma", res.gamma},
      {"lipschitz_estimate", res.lipschitz},
      {"evaluations", {{"f", counts.f}, {"gradient", counts.grad}, {"gramian", counts.gramian}}},
      {"config", nlohmann::json::parse(config_to_json({solver, cfg.instance}))["solver"]}};
  write_text(out + ".json", summary.dump(2) + "\n");

  std::cout << "termination " << to_string(res.reason) << "  iterations " << res.iterations << "  f "
            << format_double(res.f) << '\n';
  if (res.reason != Termination::tolerance) code = 2;
  return code;
}

int cmd_experiment(const std::string& name, Index runs, std::uint64_t seed, unsigned threads,
                   std::string out, const SolverFlags& flags) {
  const ConfigOverlay cfg = flags.resolve();
  if (runs < 1) throw ConfigError("--runs must be positive");
  ExperimentOptions opt;
  opt.runs = runs;
  opt.base_seed = seed;
  opt.threads = threads;
  opt.solver = cfg.solver;
  opt.instance = cfg.instance;
  if (out.empty()) out = "experiment_" + name;
  const ExperimentReport report =
      name == "quadratic" ? run_experiment_quadratic(opt) : run_experiment_compare(opt);
  write_report_files(report, out);
  if (name == "quadratic") {
    std::cout << "median slope " << format_double(report.median_slope()) << '\n';
  } else {
    std::cout << "median gradients panoc " << format_double(report.median_panoc_gradients())
              << " pgd " << format_double(report.median_pgd_gradients()) << '\n';
  }
  return 0;
}

int cmd_check(const std::string& scale, std::uint64_t seed, bool inject_fault) {
  CheckOptions opt;
  opt.scale = scale == "full" ? CheckScale::full : CheckScale::tiny;
  opt.seed = seed;
  if (inject_fault) opt.gradient_fault = 1e-3;
  return print_checks(std::cout, run_checks(opt)) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonnegative CPD by a proximal Gauss-Newton linesearch method"};
  app.require_subcommand(1);

  std::string tensor_path;
  Index rank = 0;
  std::uint64_t seed = 1;
  std::string out;
  SolverFlags flags;
  auto* dec = app.add_subcommand("decompose", "Fit a nonnegative CPD to a .ten tensor file");
  dec->add_option("tensor", tensor_path, "Input tensor (.ten)")->required();
  dec->add_option("--rank", rank, "Number of rank-1 terms")->required();
  dec->add_option("--seed", seed, "Seed for the random start");
  dec->add_option("--out", out, "Output prefix")->default_val("decompose");
  flags.attach(dec);

  std::string name;
  Index runs = 50;
  unsigned threads = 0;
  auto* exp = app.add_subcommand("experiment", "Run a seeded experiment and write CSV/JSON reports");
  exp->add_option("name", name, "quadratic | compare")
      ->required()
      ->check(CLI::IsMember({"quadratic", "compare"}));
  exp->add_option("--runs", runs, "Number of runs");
  exp->add_option("--seed", seed, "Base seed (run i uses seed + i)");
  exp->add_option("--threads", threads, "Worker threads (0 = all cores)");
  exp->add_option("--out", out, "Output prefix (default experiment_<name>)");
  flags.attach(exp);

  std::string scale = "tiny";
  bool inject_fault = false;
  auto* chk = app.add_subcommand("check", "Run the derivative and invariant oracle suite");
  chk->add_option("scale", scale, "tiny | full")->check(CLI::IsMember({"tiny", "full"}));
  chk->add_option("--seed", seed, "Seed for the random samples");
  chk->add_flag("--inject-fault", inject_fault, "Corrupt the gradient to exercise the suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (dec->parsed()) {
      if (rank < 1) {
        std::cerr << "error: --rank must be at least 1\n";
        return 1;
      }
      return cmd_decompose(tensor_path, rank, seed, out, flags);
    }
    if (exp->parsed()) return cmd_experiment(name, runs, seed, threads, out, flags);
    return cmd_check(scale, seed, inject_fault);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
