#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <string>

#include "cornersim/rng.hpp"
#include "cornersim/scenario_codec.hpp"
#include "test_helpers.hpp"

using namespace cornersim;

namespace {

// Randomized but always-valid scenario for round-trip properties.
ScenarioSpec random_scenario(RandomStream& rng) {
    ScenarioSpec spec = testutil::straight_road_scenario();
    spec.id = "fuzz-" + std::to_string(rng.next_below(100000));
    spec.name = "fuzz scenario " + std::to_string(rng.next_below(1000));
    spec.description = rng.next_uniform() < 0.5 ? "line one\nline \"two\"\ttabbed" : "";
    spec.category = static_cast<CornerCaseCategory>(rng.next_below(3));
    spec.variant = rng.next_uniform() < 0.5;
    spec.ego.initial_speed = rng.next_uniform(0.0, 12.0);
    spec.tn = 20.0 + rng.next_uniform(0.0, 100.0);
    spec.default_seed = rng.next_u64();
    spec.weather = weather_presets()[rng.next_below(9)].id;
    spec.traffic_density = static_cast<TrafficDensity>(rng.next_below(4));
    spec.constraints.mode =
        rng.next_uniform() < 0.5 ? EvaluationMode::Binary : EvaluationMode::Weighted;
    spec.constraints.failure_threshold = rng.next_uniform(0.0, 5.0);
    spec.constraints.end_on_collision = rng.next_uniform() < 0.8;

    const int n_actors = static_cast<int>(rng.next_below(4));
    for (int i = 0; i < n_actors; ++i) {
        ActorSpec a;
        a.id = "actor-" + std::to_string(i);
        a.true_class = ActorClass::Barrel;
        a.apparent_class = rng.next_uniform() < 0.3 ? ActorClass::StopSign : ActorClass::Barrel;
        a.spawn = {rng.next_uniform(5.0, 100.0), rng.next_uniform(-4.0, 4.0),
                   rng.next_uniform(-3.0, 3.0)};
        a.length = rng.next_uniform(0.3, 3.0);
        a.width = rng.next_uniform(0.3, 2.0);
        a.initially_active = rng.next_uniform() < 0.5;
        if (rng.next_uniform() < 0.5) {
            a.behavior.kind = BehaviorKind::Ballistic;
            a.behavior.params["height"] = rng.next_uniform(0.0, 2.0);
            a.behavior.params["vx"] = rng.next_uniform(-3.0, 3.0);
            a.behavior.params["vy"] = rng.next_uniform(-3.0, 3.0);
            a.behavior.params["vz"] = rng.next_uniform(0.0, 4.0);
        } else if (rng.next_uniform() < 0.5) {
            a.behavior.kind = BehaviorKind::WaypointFollow;
            a.behavior.waypoints = {{a.spawn.x, a.spawn.y, rng.next_uniform(1.0, 8.0)},
                                    {a.spawn.x + 20.0, a.spawn.y, 0.0}};
        }
        spec.actors.push_back(a);
        TriggerSpec t;
        t.id = "trig-" + std::to_string(i);
        t.conditions.push_back(TimeAtLeast{rng.next_uniform(0.0, 10.0)});
        if (rng.next_uniform() < 0.4) {
            t.conditions.push_back(EgoWithin{{rng.next_uniform(0.0, 100.0), 0.0}, 15.0});
        }
        t.action = ActivateActor{a.id};
        spec.triggers.push_back(t);
    }
    return spec;
}

}  // namespace

TEST_CASE("empty input is a syntax error at 1:1") {
    try {
        parse_scenario("");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        REQUIRE(e.line == 1);
        REQUIRE(e.column == 1);
    }
    REQUIRE_THROWS_AS(parse_scenario("   \n\t \n"), ParseError);
}

TEST_CASE("parse errors carry line and column") {
    const std::string bad = "schema_version 1\nscenario {\n  id \"x\n}\n";
    try {
        parse_scenario(bad);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        REQUIRE(e.line == 3);
        REQUIRE(e.column >= 6);
    }
}

TEST_CASE("unknown keys are rejected in strict mode") {
    auto spec = testutil::straight_road_scenario();
    std::string textform = serialize_scenario(spec);
    textform += "bogus_key 3\n";
    REQUIRE_THROWS_AS(parse_scenario(textform), ParseError);
}

TEST_CASE("duplicate keys are rejected") {
    REQUIRE_THROWS_AS(text::parse_document("a 1\na 2\n"), ParseError);
}

TEST_CASE("semantic violations surface through parse_scenario") {
    auto spec = testutil::straight_road_scenario();
    spec.tn = spec.t0;  // WINDOW_EMPTY
    // Serialize via the raw codec (serialize_scenario refuses invalid specs).
    const std::string textform = text::write_document(encode_scenario(spec));
    try {
        parse_scenario(textform);
        FAIL("expected SemanticError");
    } catch (const SemanticError& e) {
        REQUIRE(e.report.has("WINDOW_EMPTY"));
    }
}

TEST_CASE("round trip: parse(serialize(s)) == s") {
    RandomStream rng(31);
    for (int i = 0; i < 60; ++i) {
        const ScenarioSpec spec = random_scenario(rng);
        const std::string textform = serialize_scenario(spec);
        const ScenarioSpec back = parse_scenario(textform);
        REQUIRE(back == spec);
    }
}

TEST_CASE("canonical form is byte-stable") {
    RandomStream rng(32);
    for (int i = 0; i < 20; ++i) {
        const ScenarioSpec spec = random_scenario(rng);
        const std::string once = serialize_scenario(spec);
        const std::string twice = serialize_scenario(parse_scenario(once));
        REQUIRE(once == twice);
        REQUIRE(!once.empty());
        REQUIRE(once.back() == '\n');
    }
}

TEST_CASE("structurally equal specs serialize byte-identically") {
    const auto a = testutil::blocked_road_scenario();
    auto b = testutil::blocked_road_scenario();
    REQUIRE(serialize_scenario(a) == serialize_scenario(b));
}

TEST_CASE("floats keep shortest round-trip form") {
    auto spec = testutil::straight_road_scenario();
    spec.ego.initial_speed = 0.1 + 0.2;
    const std::string textform = serialize_scenario(spec);
    REQUIRE(textform.find("0.30000000000000004") != std::string::npos);
    const ScenarioSpec back = parse_scenario(textform);
    REQUIRE(back.ego.initial_speed == spec.ego.initial_speed);  // bit-exact
}

TEST_CASE("parser survives arbitrary bytes quickly") {
    RandomStream rng(1234);
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < 600; ++i) {
        const size_t len = rng.next_below(4000);
        std::string junk;
        junk.reserve(len);
        for (size_t j = 0; j < len; ++j) {
            junk.push_back(static_cast<char>(rng.next_below(256)));
        }
        try {
            parse_scenario(junk);
        } catch (const ParseError&) {
        } catch (const SemanticError&) {
        }
    }
    // Mutations of a valid document.
    const std::string valid = serialize_scenario(testutil::blocked_road_scenario());
    for (int i = 0; i < 400; ++i) {
        std::string mutated = valid;
        const int edits = 1 + static_cast<int>(rng.next_below(8));
        for (int e = 0; e < edits; ++e) {
            const size_t pos = rng.next_below(mutated.size());
            mutated[pos] = static_cast<char>(rng.next_below(256));
        }
        try {
            parse_scenario(mutated);
        } catch (const ParseError&) {
        } catch (const SemanticError&) {
        }
    }
    const auto elapsed = std::chrono::steady_clock::now() - t0;
    REQUIRE(std::chrono::duration_cast<std::chrono::seconds>(elapsed).count() < 20);
}

TEST_CASE("deep nesting is bounded, not fatal") {
    std::string evil = "a ";
    for (int i = 0; i < 200; ++i) evil += "[";
    REQUIRE_THROWS_AS(text::parse_document(evil), ParseError);
    std::string evil2 = "a ";
    for (int i = 0; i < 200; ++i) evil2 += "{\nb ";
    REQUIRE_THROWS_AS(text::parse_document(evil2), ParseError);
}
