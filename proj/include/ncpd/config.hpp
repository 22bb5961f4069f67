#pragma once

#include "ncpd/experiments.hpp"

#include <stdexcept>
#include <string>

namespace ncpd {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Parsed JSON overlay. Recognized layout:
///
///   { "solver":   { "alpha": 0.95, ..., "cg": { "tol_min": 1e-10, ... } },
///     "instance": { "dims": [10, 10, 10], "rank": 5, ... } }
///
/// Absent keys keep the compiled defaults; unknown keys and wrongly typed
/// values raise ConfigError naming the offending key.
struct ConfigOverlay {
  SolverConfig solver;
  InstanceSpec instance;
};

ConfigOverlay parse_config(const std::string& json_text, const ConfigOverlay& defaults = {});
ConfigOverlay load_config_file(const std::string& path, const ConfigOverlay& defaults = {});

/// The full effective configuration as JSON text (round-trips through parse_config).
std::string config_to_json(const ConfigOverlay& cfg);

}  // namespace ncpd
