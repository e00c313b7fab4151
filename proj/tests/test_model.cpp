#include <catch2/catch_amalgamated.hpp>

#include "cornersim/rng.hpp"
#include "cornersim/validate.hpp"
#include "test_helpers.hpp"

using namespace cornersim;

TEST_CASE("fixture scenario validates cleanly") {
    const auto report = validate_scenario(testutil::straight_road_scenario());
    for (const auto& v : report.violations) {
        INFO(v.code << ": " << v.message);
    }
    REQUIRE(report.ok());
}

TEST_CASE("empty run window is rejected") {
    auto spec = testutil::straight_road_scenario();
    spec.tn = spec.t0;
    REQUIRE(validate_scenario(spec).has("WINDOW_EMPTY"));
    spec.tn = spec.t0 - 1.0;
    REQUIRE(validate_scenario(spec).has("WINDOW_EMPTY"));
}

TEST_CASE("dangling actor references are reported") {
    auto spec = testutil::straight_road_scenario();
    TriggerSpec trig;
    trig.id = "t1";
    trig.conditions = {TimeAtLeast{1.0}};
    trig.action = ActivateActor{"ghost"};
    spec.triggers.push_back(trig);
    REQUIRE(validate_scenario(spec).has("DANGLING_ACTOR_REF"));
}

TEST_CASE("watching a missing actor is reported too") {
    auto spec = testutil::blocked_road_scenario();
    TriggerSpec trig;
    trig.id = "t1";
    trig.conditions = {ActorWithin{"ghost", {0, 0}, 5.0}};
    trig.action = Despawn{"wall"};
    spec.triggers.push_back(trig);
    REQUIRE(validate_scenario(spec).has("DANGLING_ACTOR_REF"));
}

TEST_CASE("non-positive dimensions are rejected") {
    auto spec = testutil::blocked_road_scenario();
    spec.actors[0].width = 0.0;
    REQUIRE(validate_scenario(spec).has("BAD_DIMENSIONS"));
}

TEST_CASE("apparent class restricted to look-alike-capable classes") {
    auto spec = testutil::blocked_road_scenario();
    spec.actors[0].true_class = ActorClass::Billboard;
    spec.actors[0].apparent_class = ActorClass::StopSign;
    REQUIRE(validate_scenario(spec).ok());

    spec.actors[0].true_class = ActorClass::Car;
    spec.actors[0].apparent_class = ActorClass::StopSign;
    REQUIRE(validate_scenario(spec).has("BAD_APPARENT_CLASS"));
}

TEST_CASE("reserved actor ids are rejected") {
    auto spec = testutil::blocked_road_scenario();
    spec.actors[0].id = "ego";
    REQUIRE(validate_scenario(spec).has("RESERVED_ACTOR_ID"));
    spec.actors[0].id = "traffic-00";
    REQUIRE(validate_scenario(spec).has("RESERVED_ACTOR_ID"));
}

TEST_CASE("trigger cycles are rejected") {
    auto spec = testutil::blocked_road_scenario();
    TriggerSpec t1;
    t1.id = "t1";
    t1.conditions = {ActorWithin{"wall", {40.0, -1.75}, 5.0}};
    t1.action = ApplyImpulse{"wall", {1.0, 0.0}};
    spec.triggers.push_back(t1);  // t1 watches wall and also moves it
    REQUIRE(validate_scenario(spec).has("TRIGGER_CYCLE"));
}

TEST_CASE("ego or goal off the drivable area") {
    auto spec = testutil::straight_road_scenario();
    spec.ego.spawn.y = 40.0;
    REQUIRE(validate_scenario(spec).has("EGO_OFF_ROAD"));

    spec = testutil::straight_road_scenario();
    spec.goal_region = {300.0, 40.0, 310.0, 50.0};
    REQUIRE(validate_scenario(spec).has("GOAL_OFF_ROAD"));
}

TEST_CASE("weight table hierarchy is enforced") {
    auto spec = testutil::straight_road_scenario();
    spec.constraints.mode = EvaluationMode::Weighted;
    spec.constraints.weight_table[ActorClass::StopSign] = 50.0;  // signs above humans
    REQUIRE(validate_scenario(spec).has("WEIGHT_HIERARCHY"));
}

TEST_CASE("missing weight rows are reported") {
    auto spec = testutil::straight_road_scenario();
    spec.constraints.mode = EvaluationMode::Weighted;
    spec.constraints.weight_table.erase(ActorClass::Barrel);
    REQUIRE(validate_scenario(spec).has("MISSING_WEIGHT"));
}

// ---------------------------------------------------------------------------
// apply_overrides
// ---------------------------------------------------------------------------

TEST_CASE("empty overrides are the identity") {
    const auto spec = testutil::straight_road_scenario();
    const auto same = apply_overrides(spec, {});
    REQUIRE(same == spec);
}

TEST_CASE("weather override substitutes only that field") {
    const auto spec = testutil::straight_road_scenario();
    Overrides o;
    o.weather = "hard-rain-noon";
    const auto out = apply_overrides(spec, o);
    REQUIRE(out.weather == "hard-rain-noon");
    ScenarioSpec expect = spec;
    expect.weather = "hard-rain-noon";
    REQUIRE(out == expect);
    REQUIRE(spec.weather == "clear-noon");  // input untouched
}

TEST_CASE("unknown weather preset fails") {
    Overrides o;
    o.weather = "plasma-storm";
    REQUIRE_THROWS_AS(apply_overrides(testutil::straight_road_scenario(), o), OverrideError);
}

TEST_CASE("trigger shift moves time conditions") {
    auto spec = testutil::blocked_road_scenario();
    TriggerSpec trig;
    trig.id = "drop";
    trig.conditions = {TimeAtLeast{3.0}};
    trig.action = Despawn{"wall"};
    spec.triggers.push_back(trig);

    Overrides o;
    o.trigger_shifts.push_back({"drop", 2.0});
    const auto out = apply_overrides(spec, o);
    const auto* t = std::get_if<TimeAtLeast>(&out.triggers[0].conditions[0]);
    REQUIRE(t != nullptr);
    REQUIRE(t->t == Catch::Approx(5.0));

    Overrides bad;
    bad.trigger_shifts.push_back({"nope", 2.0});
    REQUIRE_THROWS_AS(apply_overrides(spec, bad), OverrideError);
}

TEST_CASE("override results re-validate cleanly (fuzz)") {
    const auto spec = testutil::blocked_road_scenario();
    RandomStream rng(17);
    const auto& presets = weather_presets();
    for (int i = 0; i < 200; ++i) {
        Overrides o;
        if (rng.next_uniform() < 0.7) {
            o.weather = presets[rng.next_below(presets.size())].id;
        }
        if (rng.next_uniform() < 0.7) {
            o.traffic_density = static_cast<TrafficDensity>(rng.next_below(4));
        }
        if (rng.next_uniform() < 0.5) o.seed = rng.next_u64();
        if (rng.next_uniform() < 0.5) o.ego_initial_speed = rng.next_uniform(0.0, 20.0);
        const auto out = apply_overrides(spec, o);
        REQUIRE(validate_scenario(out).ok());
        // Purity: same inputs, same result.
        REQUIRE(apply_overrides(spec, o) == out);
    }
}
