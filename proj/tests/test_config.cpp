#include <doctest.h>

#include <cmath>

#include "advaug/config.hpp"

using namespace advaug;
using nlohmann::json;

TEST_CASE("run config round trip") {
  RunConfig cfg;
  cfg.architecture.hidden = {16, 8, 4};
  cfg.architecture.activation = Activation::Relu;
  cfg.train.alpha = 3e-4;
  cfg.train.gamma = 0.25;
  cfg.train.rounds = 3;
  cfg.train.optimizer = OptimizerKind::Sgd;
  cfg.train.cost_space = CostSpace::Input;
  cfg.train.n_append = 17;
  cfg.train.seed = 99;
  cfg.gamma_grid = {1.0, 0.5};
  cfg.selection = Selection::MaxSoftmax;
  const json j = to_json(cfg);
  const RunConfig back = run_config_from_json(json::parse(j.dump()));
  CHECK(to_json(back) == j);
  CHECK(back.train.n_append == std::optional<std::size_t>(17));
  CHECK(back.architecture.hidden == cfg.architecture.hidden);
  CHECK(back.selection == Selection::MaxSoftmax);
}

TEST_CASE("omitted keys keep defaults") {
  const RunConfig cfg = run_config_from_json(json::parse(R"({"train": {"K": 4}})"));
  const RunConfig def;
  CHECK(cfg.train.rounds == 4);
  CHECK(cfg.train.alpha == def.train.alpha);
  CHECK(cfg.train.eta == def.train.eta);
  CHECK(cfg.architecture.hidden == def.architecture.hidden);
  CHECK_FALSE(cfg.train.n_append.has_value());
}

TEST_CASE("unknown keys and bad values are rejected") {
  CHECK_THROWS_WITH_AS(run_config_from_json(json::parse(R"({"trian": {}})")), doctest::Contains("trian"),
                       std::invalid_argument);
  CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"train": {"lr": 1}})")), std::invalid_argument);
  CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"train": {"optimizer": "rmsprop"}})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"train": {"cost_space": "pixel"}})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"architecture": {"hidden": []}})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"architecture": {"hidden": [0]}})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"gamma_grid": [1, -1]})")), std::invalid_argument);
  CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"selection": "vote"})")), std::invalid_argument);
  CHECK_THROWS_AS(run_config_from_json(json::parse("[1, 2]")), std::invalid_argument);
  CHECK_THROWS(run_config_from_json(json::parse(R"({"train": {"K": "two"}})")));
}

TEST_CASE("gen config round trip and validation") {
  GenConfig cfg = gen_preset("toy-default");
  cfg.domains[1].spec.shift.translation = Vector::Constant(2, 0.5);
  const json j = to_json(cfg);
  const GenConfig back = gen_config_from_json(json::parse(j.dump()));
  CHECK(to_json(back) == j);
  REQUIRE(back.domains.size() == cfg.domains.size());
  for (std::size_t i = 0; i < cfg.domains.size(); ++i)
    CHECK(generate(back.domains[i].spec) == generate(cfg.domains[i].spec));

  CHECK_THROWS_AS(gen_config_from_json(json::parse(R"({"domains": [{"name": "a"}, {"name": "a"}]})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(gen_config_from_json(json::parse(R"({"domains": [{"name": "../x"}]})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(gen_config_from_json(json::parse(R"({"domains": [{"name": "a", "colour": 1}]})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      gen_config_from_json(json::parse(R"({"domains": [{"name": "a", "shift": {"rotation": 1, "skew": 2}}]})")),
      std::invalid_argument);
  CHECK_THROWS_AS(
      gen_config_from_json(json::parse(R"({"domains": [{"name": "a", "shift": {"translation": [1, 2, 3]}}]})")),
      std::invalid_argument);
}

TEST_CASE("presets") {
  CHECK(is_gen_preset("toy-default"));
  CHECK(is_gen_preset("identity-shift"));
  CHECK_FALSE(is_gen_preset("defaults"));
  CHECK_THROWS_AS(gen_preset("nope"), std::invalid_argument);
  CHECK(is_run_preset("defaults"));
  CHECK_THROWS_AS(run_preset("nope"), std::invalid_argument);

  const GenConfig toy = gen_preset("toy-default");
  REQUIRE(toy.domains.size() == 5);
  const char* names[] = {"source", "source_test", "near", "mid", "far"};
  for (std::size_t i = 0; i < 5; ++i) CHECK(toy.domains[i].name == names[i]);
  CHECK(toy.domains[2].spec.shift.rotation < toy.domains[3].spec.shift.rotation);
  CHECK(toy.domains[3].spec.shift.rotation < toy.domains[4].spec.shift.rotation);

  const GenConfig id = gen_preset("identity-shift");
  REQUIRE(id.domains.size() == 2);
  CHECK(id.domains[1].spec.shift.rotation == 0.0);
  CHECK(id.domains[0].spec.seed != id.domains[1].spec.seed);

  const RunConfig defaults = run_preset("defaults");
  CHECK(defaults.train.alpha == 1e-4);
  CHECK(defaults.train.eta == 1.0);
  CHECK(defaults.train.t_min == 100);
  CHECK(defaults.train.t_max == 15);
  CHECK(defaults.gamma_grid == default_gamma_grid());
}

TEST_CASE("gamma grid") {
  const auto grid = default_gamma_grid();
  REQUIRE(grid.size() == 7);
  for (std::size_t i = 0; i < 7; ++i) CHECK(grid[i] == doctest::Approx(std::pow(10.0, -double(i))).epsilon(1e-15));
  CHECK(grid.front() == 1.0);
}
