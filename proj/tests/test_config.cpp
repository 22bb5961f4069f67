#include "ncpd/config.hpp"

#include <doctest.h>

using namespace ncpd;

TEST_SUITE("config") {

TEST_CASE("empty overlay keeps defaults") {
  const ConfigOverlay c = parse_config("{}");
  CHECK(c.solver.alpha == 0.95);
  CHECK(c.solver.beta == 0.5);
  CHECK(c.solver.epsilon == 1e-20);
  CHECK(c.solver.max_iters == 2000);
  CHECK(c.solver.max_tau_halvings == 5);
  CHECK(c.solver.cauchy_floor);
  CHECK(c.instance.dims == std::vector<Index>{10, 10, 10});
  CHECK(c.instance.rank == 5);
}

TEST_CASE("overlay values") {
  const ConfigOverlay c = parse_config(R"({
    "solver": {"alpha": 0.9, "max_iters": 15, "cauchy_floor": false, "convention": 1,
               "box_bound": 4.5, "cg": {"tol_min": 1e-12, "forcing": false}},
    "instance": {"dims": [4, 5, 6], "rank": 3, "zeros_per_factor": 2, "seed": 9}
  })");
  CHECK(c.solver.alpha == 0.9);
  CHECK(c.solver.max_iters == 15);
  CHECK_FALSE(c.solver.cauchy_floor);
  CHECK(c.solver.convention == ClarkeConvention::one);
  CHECK(c.solver.box_bound == 4.5);
  CHECK(c.solver.cg.tol_min == 1e-12);
  CHECK_FALSE(c.solver.cg.forcing);
  CHECK(c.instance.dims == std::vector<Index>{4, 5, 6});
  CHECK(c.instance.rank == 3);
  CHECK(c.instance.seed == 9);

  CHECK_FALSE(parse_config(R"({"solver": {"box_bound": null}})", c).solver.box_bound.has_value());
}

TEST_CASE("unknown keys are rejected") {
  auto message = [](const char* text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message(R"({"solvr": {}})").find("'solvr'") != std::string::npos);
  CHECK(message(R"({"solver": {"alpah": 0.9}})").find("'solver.alpah'") != std::string::npos);
  CHECK(message(R"({"solver": {"cg": {"tol": 1}}})").find("'solver.cg.tol'") != std::string::npos);
  CHECK(message(R"({"instance": {"rnak": 2}})").find("'instance.rnak'") != std::string::npos);
}

TEST_CASE("type and range errors") {
  CHECK_THROWS_AS(parse_config(R"({"solver": {"alpha": "big"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"solver": {"max_iters": 1.5}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"solver": {"cauchy_floor": 1}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"solver": {"convention": 2}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"solver": {"alpha": 1.5}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"solver": {"seed": -1}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"instance": {"dims": [3]}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"([1, 2])"), ConfigError);
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  CHECK_THROWS_AS(load_config_file("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("effective configuration round trips") {
  ConfigOverlay c;
  c.solver.alpha = 0.8;
  c.solver.box_bound = 3.0;
  c.instance.dims = {3, 4, 5};
  c.instance.zeros_per_factor = 3;
  const ConfigOverlay back = parse_config(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));
  CHECK(back.solver.alpha == 0.8);
  CHECK(back.instance.dims == c.instance.dims);
}

}
