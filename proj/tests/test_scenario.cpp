#include <doctest.h>

#include <stdexcept>
#include <string>

#include "probe_mpc/scenario.hpp"

using namespace probe_mpc;

namespace {

const char* kMinimalConfig = R"(
# three straight lanes, one agent
[sim]
type = merge
episode_length = 20
seed = 3

[lane]
start = 0 7
end = 150 7
width = 3.5

[lane]
start = 0 3.5
end = 150 3.5
width = 3.5

[lane]
start = 0 0
end = 150 0
width = 3.5

[ego]
spawn = 12 7 0 5.5
target_lane = 1
target_speed = 6

[agent]
spawn = 4 3.5 0 5.5
phi = 0.2 0.6 0.2
target_speed = 5.5
route = 1
switch_time = 7
switch_phi = 0.5 0.25 0.25
)";

}  // namespace

TEST_CASE("parse_config: defaults fill the unspecified sections") {
  const ScenarioConfig config = parse_config(kMinimalConfig);
  CHECK(config.sim.type == ScenarioType::kMerge);
  CHECK(config.lane_map.lanes.size() == 3);
  CHECK(config.agents.size() == 1);
  // Omitted [weights] takes the published defaults.
  CHECK(config.weights.alpha1 == 0.9);
  CHECK(config.weights.alpha2 == 0.9);
  CHECK(config.weights.alpha3 == 0.1);
  CHECK(config.weights.safe_distance == 4.0);
  CHECK(config.weights.beta == 0.02);
  CHECK(config.weights.tau == 5.0);
  CHECK(config.planner.horizon == 25);
  CHECK(config.sim.dt == 0.1);
  CHECK(config.agents[0].switch_time.has_value());
}

TEST_CASE("config round trip: write then load reproduces the config") {
  const ScenarioConfig config = parse_config(kMinimalConfig);
  const std::string text = write_config(config);
  const ScenarioConfig reloaded = parse_config(text);
  CHECK(write_config(reloaded) == text);
  CHECK(reloaded.agents[0].phi(1) == config.agents[0].phi(1));
  CHECK(reloaded.sim.seed == config.sim.seed);
  CHECK(reloaded.weights.beta == config.weights.beta);
}

TEST_CASE("parse_config: unknown keys carry line numbers") {
  const std::string bad = std::string(kMinimalConfig) + "\n[weights]\nbogus = 1\n";
  try {
    parse_config(bad, "test.cfg");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string message = e.what();
    CHECK(message.find("bogus") != std::string::npos);
    CHECK(message.find("test.cfg:") != std::string::npos);
  }
}

TEST_CASE("parse_config: unknown section rejected") {
  const std::string bad = std::string(kMinimalConfig) + "\n[rocket]\nq = 1\n";
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
}

TEST_CASE("validate: negative risk threshold rejected") {
  ScenarioConfig config = parse_config(kMinimalConfig);
  config.weights.tau = -1.0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}

TEST_CASE("validate: overlapping spawns rejected") {
  ScenarioConfig config = parse_config(kMinimalConfig);
  config.agents[0].spawn = config.ego_spawn;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}

TEST_CASE("validate: switch time outside episode rejected") {
  ScenarioConfig config = parse_config(kMinimalConfig);
  config.agents[0].switch_time = 50.0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}

TEST_CASE("variant_weights: probing variants") {
  const ScenarioConfig config = parse_config(kMinimalConfig);
  CHECK(config.variant_weights(Variant::kProbing).alpha3 == 0.1);
  CHECK(config.variant_weights(Variant::kNoProbing).alpha3 == 0.0);
  const ObjectiveWeights conservative =
      config.variant_weights(Variant::kConservative);
  CHECK(conservative.alpha3 == 0.0);
  CHECK(conservative.beta == doctest::Approx(0.08));
}

TEST_CASE("variant names round trip") {
  for (Variant v : {Variant::kProbing, Variant::kNoProbing,
                    Variant::kConservative}) {
    CHECK(variant_from_name(variant_name(v)) == v);
  }
  CHECK_THROWS_AS(variant_from_name("cautious"), std::invalid_argument);
}

TEST_CASE("composite_route: concatenates path segments") {
  ScenarioConfig config = parse_config(kMinimalConfig);
  Lane connector;
  connector.centerline = {{150.0, 3.5}, {160.0, 3.5}};
  connector.width = 3.5;
  config.lane_map.connectors.push_back(connector);
  AgentSpec agent = config.agents[0];
  agent.route = {1, 3};
  const Lane route = config.composite_route(agent);
  CHECK(route.centerline.size() == 3);  // shared joint point dropped
  CHECK(route.centerline.back().x() == doctest::Approx(160.0));
}
