#include "ncpd/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <optional>
#include <type_traits>
#include <sstream>

namespace ncpd {
namespace {

using nlohmann::json;

class Reader {
public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError("config: '" + path_ + "' must be an object");
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.push_back(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError("expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw ConfigError("expected an integer");
        if (std::is_unsigned_v<T> && it->is_number_integer() && !it->is_number_unsigned() &&
            it->template get<long long>() < 0) {
          throw ConfigError("expected a nonnegative integer");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw ConfigError("expected a number");
      }
      out = it->template get<T>();
    } catch (const std::exception& e) {
      throw ConfigError("config: key '" + qualified(key) + "': " + e.what());
    }
  }

  void read_optional(const char* key, std::optional<double>& out) {
    seen_.push_back(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    if (it->is_null()) {
      out.reset();
    } else if (it->is_number()) {
      out = it->get<double>();
    } else {
      throw ConfigError("config: key '" + qualified(key) + "': expected a number or null");
    }
  }

  void read_dims(const char* key, std::vector<Index>& out) {
    seen_.push_back(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    if (!it->is_array()) throw ConfigError("config: key '" + qualified(key) + "': expected an array");
    std::vector<Index> dims;
    for (const auto& v : *it) {
      if (!v.is_number_integer()) {
        throw ConfigError("config: key '" + qualified(key) + "': expected integer entries");
      }
      dims.push_back(v.get<Index>());
    }
    out = std::move(dims);
  }

  const json* child(const char* key) {
    seen_.push_back(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void reject_unknown() const {
    for (const auto& [key, value] : obj_.items()) {
      (void)value;
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
        throw ConfigError("config: unknown key '" + qualified(key) + "'");
      }
    }
  }

private:
  const json& obj_;
  std::string path_;
  std::vector<std::string> seen_;
};

void read_cg(const json& obj, CgSettings& cg) {
  Reader r(obj, "solver.cg");
  r.read("tol_min", cg.tol_min);
  r.read("forcing_cap", cg.forcing_cap);
  r.read("forcing_switch", cg.forcing_switch);
  r.read("forcing", cg.forcing);
  r.read("maxit", cg.maxit);
  r.read("damping", cg.damping);
  r.reject_unknown();
}

void read_solver(const json& obj, SolverConfig& s) {
  Reader r(obj, "solver");
  r.read("alpha", s.alpha);
  r.read("beta", s.beta);
  r.read("epsilon", s.epsilon);
  r.read("max_iters", s.max_iters);
  r.read("max_tau_halvings", s.max_tau_halvings);
  r.read("max_gamma_halvings", s.max_gamma_halvings);
  r.read("lipschitz_fd_step", s.lipschitz_fd_step);
  r.read("cauchy_floor", s.cauchy_floor);
  r.read("cauchy_reciprocal", s.cauchy_reciprocal);
  r.read("use_direction", s.use_direction);
  int convention = static_cast<int>(s.convention);
  r.read("convention", convention);
  if (convention != 0 && convention != 1) throw ConfigError("config: key 'solver.convention': expected 0 or 1");
  s.convention = static_cast<ClarkeConvention>(convention);
  r.read("seed", s.seed);
  r.read_optional("box_bound", s.box_bound);
  r.read("feasibility_tol", s.feasibility_tol);
  if (const json* cg = r.child("cg")) read_cg(*cg, s.cg);
  r.reject_unknown();
}

void read_instance(const json& obj, InstanceSpec& spec) {
  Reader r(obj, "instance");
  r.read_dims("dims", spec.dims);
  r.read("rank", spec.rank);
  r.read("zeros_per_factor", spec.zeros_per_factor);
  r.read("negatives_per_factor", spec.negatives_per_factor);
  r.read("entry_lo", spec.entry_lo);
  r.read("entry_hi", spec.entry_hi);
  r.read("negative_lo", spec.negative_lo);
  r.read("perturbation_sigma", spec.perturbation_sigma);
  r.read("seed", spec.seed);
  r.reject_unknown();
}

}  // namespace

ConfigOverlay parse_config(const std::string& json_text, const ConfigOverlay& defaults) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  ConfigOverlay out = defaults;
  Reader r(root, "");
  if (const json* s = r.child("solver")) read_solver(*s, out.solver);
  if (const json* i = r.child("instance")) read_instance(*i, out.instance);
  r.reject_unknown();
  try {
    out.solver.validate();
    out.instance.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return out;
}

ConfigOverlay load_config_file(const std::string& path, const ConfigOverlay& defaults) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_config(text.str(), defaults);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string config_to_json(const ConfigOverlay& cfg) {
  const SolverConfig& s = cfg.solver;
  const InstanceSpec& i = cfg.instance;
  json cg = {{"tol_min", s.cg.tol_min},         {"forcing_cap", s.cg.forcing_cap},
             {"forcing_switch", s.cg.forcing_switch}, {"forcing", s.cg.forcing},
             {"maxit", s.cg.maxit},             {"damping", s.cg.damping}};
  json solver = {{"alpha", s.alpha},
                 {"beta", s.beta},
                 {"epsilon", s.epsilon},
                 {"max_iters", s.max_iters},
                 {"max_tau_halvings", s.max_tau_halvings},
                 {"max_gamma_halvings", s.max_gamma_halvings},
                 {"lipschitz_fd_step", s.lipschitz_fd_step},
                 {"cauchy_floor", s.cauchy_floor},
                 {"cauchy_reciprocal", s.cauchy_reciprocal},
                 {"use_direction", s.use_direction},
                 {"convention", static_cast<int>(s.convention)},
                 {"seed", s.seed},
                 {"box_bound", s.box_bound ? json(*s.box_bound) : json(nullptr)},
                 {"feasibility_tol", s.feasibility_tol},
                 {"cg", cg}};
  json instance = {{"dims", i.dims},
                   {"rank", i.rank},
                   {"zeros_per_factor", i.zeros_per_factor},
                   {"negatives_per_factor", i.negatives_per_factor},
                   {"entry_lo", i.entry_lo},
                   {"entry_hi", i.entry_hi},
                   {"negative_lo", i.negative_lo},
                   {"perturbation_sigma", i.perturbation_sigma},
                   {"seed", i.seed}};
  return json{{"solver", solver}, {"instance", instance}}.dump(2);
}

}  // namespace ncpd
