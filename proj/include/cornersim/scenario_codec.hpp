#pragma once

// Typed binding between ScenarioSpec and the .3cs text format. Decoding is
// strict: unknown keys are rejected with their source location so typos in
// hand-edited files surface immediately.

#include <set>
#include <string>

#include "cornersim/text.hpp"
#include "cornersim/types.hpp"
#include "cornersim/validate.hpp"
#include "cornersim/version.hpp"

namespace cornersim {

using text::ParseError;
using text::Value;

/// Parse succeeded syntactically but the spec breaks invariants.
struct SemanticError : std::runtime_error {
    ValidationReport report;
    explicit SemanticError(ValidationReport r)
        : std::runtime_error("scenario violates invariants: " +
                             (r.violations.empty() ? std::string("?") : r.violations.front().code)),
          report(std::move(r)) {}
};

namespace codec_detail {

[[noreturn]] inline void fail(const Value& at, const std::string& message) {
    throw ParseError(at.line, at.column, message);
}

inline void expect_keys(const Value& block, std::initializer_list<const char*> allowed) {
    for (const auto& [key, val] : block.entries) {
        bool ok = false;
        for (const char* a : allowed) {
            if (key == a) {
                ok = true;
                break;
            }
        }
        if (!ok) fail(val, "unknown key '" + key + "'");
    }
}

inline const Value& require(const Value& block, const char* key) {
    const Value* v = block.find(key);
    if (!v) fail(block, std::string("missing key '") + key + "'");
    return *v;
}

inline double get_double(const Value& v, const char* what) {
    if (!v.is_number()) fail(v, std::string(what) + " must be a number");
    return v.as_double();
}

inline std::int64_t get_int(const Value& v, const char* what) {
    if (v.kind != Value::Kind::Int) fail(v, std::string(what) + " must be an integer");
    return v.int_value;
}

inline bool get_bool(const Value& v, const char* what) {
    if (v.kind != Value::Kind::Bool) fail(v, std::string(what) + " must be true or false");
    return v.bool_value;
}

inline std::string get_string(const Value& v, const char* what) {
    if (v.kind != Value::Kind::String) fail(v, std::string(what) + " must be a quoted string");
    return v.text;
}

inline std::string get_symbol(const Value& v, const char* what) {
    if (v.kind != Value::Kind::Symbol) fail(v, std::string(what) + " must be a bare word");
    return v.text;
}

inline const Value& get_block(const Value& v, const char* what) {
    if (v.kind != Value::Kind::Block) fail(v, std::string(what) + " must be a block");
    return v;
}

inline const Value& get_list(const Value& v, const char* what) {
    if (v.kind != Value::Kind::List) fail(v, std::string(what) + " must be a list");
    return v;
}

inline Pose2D decode_pose(const Value& v) {
    const Value& b = get_block(v, "pose");
    expect_keys(b, {"x", "y", "heading"});
    Pose2D p;
    p.x = get_double(require(b, "x"), "x");
    p.y = get_double(require(b, "y"), "y");
    if (const Value* h = b.find("heading")) p.heading = get_double(*h, "heading");
    return p;
}

inline Value encode_pose(const Pose2D& p) {
    Value b = Value::block();
    b.set("x", Value::of_float(p.x));
    b.set("y", Value::of_float(p.y));
    b.set("heading", Value::of_float(p.heading));
    return b;
}

inline Vec2 decode_point(const Value& v) {
    const Value& b = get_block(v, "point");
    expect_keys(b, {"x", "y"});
    return {get_double(require(b, "x"), "x"), get_double(require(b, "y"), "y")};
}

inline Value encode_point(const Vec2& p) {
    Value b = Value::block();
    b.set("x", Value::of_float(p.x));
    b.set("y", Value::of_float(p.y));
    return b;
}

inline Rect decode_rect(const Value& v) {
    const Value& b = get_block(v, "rect");
    expect_keys(b, {"min_x", "min_y", "max_x", "max_y"});
    Rect r;
    r.min_x = get_double(require(b, "min_x"), "min_x");
    r.min_y = get_double(require(b, "min_y"), "min_y");
    r.max_x = get_double(require(b, "max_x"), "max_x");
    r.max_y = get_double(require(b, "max_y"), "max_y");
    return r;
}

inline Value encode_rect(const Rect& r) {
    Value b = Value::block();
    b.set("min_x", Value::of_float(r.min_x));
    b.set("min_y", Value::of_float(r.min_y));
    b.set("max_x", Value::of_float(r.max_x));
    b.set("max_y", Value::of_float(r.max_y));
    return b;
}

inline BehaviorScript decode_behavior(const Value& v) {
    const Value& b = get_block(v, "behavior");
    expect_keys(b, {"kind", "waypoints", "params"});
    BehaviorScript script;
    const std::string kind = get_symbol(require(b, "kind"), "behavior kind");
    const auto parsed = behavior_kind_from_token(kind);
    if (!parsed) fail(require(b, "kind"), "unknown behavior kind '" + kind + "'");
    script.kind = *parsed;
    if (const Value* wps = b.find("waypoints")) {
        for (const Value& w : get_list(*wps, "waypoints").items) {
            const Value& wb = get_block(w, "waypoint");
            expect_keys(wb, {"x", "y", "speed"});
            Waypoint wp;
            wp.x = get_double(require(wb, "x"), "x");
            wp.y = get_double(require(wb, "y"), "y");
            wp.speed = get_double(require(wb, "speed"), "speed");
            script.waypoints.push_back(wp);
        }
    }
    if (const Value* params = b.find("params")) {
        for (const auto& [key, val] : get_block(*params, "params").entries) {
            script.params[key] = get_double(val, key.c_str());
        }
    }
    return script;
}

inline Value encode_behavior(const BehaviorScript& s) {
    Value b = Value::block();
    b.set("kind", Value::of_symbol(to_token(s.kind)));
    if (!s.waypoints.empty()) {
        Value list = Value::list();
        for (const auto& wp : s.waypoints) {
            Value w = Value::block();
            w.set("x", Value::of_float(wp.x));
            w.set("y", Value::of_float(wp.y));
            w.set("speed", Value::of_float(wp.speed));
            list.items.push_back(std::move(w));
        }
        b.set("waypoints", std::move(list));
    }
    if (!s.params.empty()) {
        Value params = Value::block();
        for (const auto& [key, val] : s.params) params.set(key, Value::of_float(val));
        b.set("params", std::move(params));
    }
    return b;
}

inline TriggerCondition decode_condition(const Value& v) {
    const Value& b = get_block(v, "condition");
    const std::string kind = get_symbol(require(b, "kind"), "condition kind");
    if (kind == "time_at_least") {
        expect_keys(b, {"kind", "t"});
        return TimeAtLeast{get_double(require(b, "t"), "t")};
    }
    if (kind == "ego_within") {
        expect_keys(b, {"kind", "point", "radius"});
        return EgoWithin{decode_point(require(b, "point")),
                         get_double(require(b, "radius"), "radius")};
    }
    if (kind == "actor_within") {
        expect_keys(b, {"kind", "actor", "point", "radius"});
        return ActorWithin{get_string(require(b, "actor"), "actor"),
                           decode_point(require(b, "point")),
                           get_double(require(b, "radius"), "radius")};
    }
    if (kind == "ego_speed_above") {
        expect_keys(b, {"kind", "speed"});
        return EgoSpeedAbove{get_double(require(b, "speed"), "speed")};
    }
    fail(require(b, "kind"), "unknown condition kind '" + kind + "'");
}

inline Value encode_condition(const TriggerCondition& c) {
    Value b = Value::block();
    if (const auto* t = std::get_if<TimeAtLeast>(&c)) {
        b.set("kind", Value::of_symbol("time_at_least"));
        b.set("t", Value::of_float(t->t));
    } else if (const auto* e = std::get_if<EgoWithin>(&c)) {
        b.set("kind", Value::of_symbol("ego_within"));
        b.set("point", encode_point(e->point));
        b.set("radius", Value::of_float(e->radius));
    } else if (const auto* a = std::get_if<ActorWithin>(&c)) {
        b.set("kind", Value::of_symbol("actor_within"));
        b.set("actor", Value::of_string(a->actor_id));
        b.set("point", encode_point(a->point));
        b.set("radius", Value::of_float(a->radius));
    } else if (const auto* s = std::get_if<EgoSpeedAbove>(&c)) {
        b.set("kind", Value::of_symbol("ego_speed_above"));
        b.set("speed", Value::of_float(s->speed));
    }
    return b;
}

inline TriggerAction decode_action(const Value& v) {
    const Value& b = get_block(v, "action");
    const std::string kind = get_symbol(require(b, "kind"), "action kind");
    if (kind == "activate_actor") {
        expect_keys(b, {"kind", "actor"});
        return ActivateActor{get_string(require(b, "actor"), "actor")};
    }
    if (kind == "set_behavior") {
        expect_keys(b, {"kind", "actor", "behavior"});
        return SetBehavior{get_string(require(b, "actor"), "actor"),
                           decode_behavior(require(b, "behavior"))};
    }
    if (kind == "apply_impulse") {
        expect_keys(b, {"kind", "actor", "velocity"});
        return ApplyImpulse{get_string(require(b, "actor"), "actor"),
                            decode_point(require(b, "velocity"))};
    }
    if (kind == "despawn") {
        expect_keys(b, {"kind", "actor"});
        return Despawn{get_string(require(b, "actor"), "actor")};
    }
    fail(require(b, "kind"), "unknown action kind '" + kind + "'");
}

inline Value encode_action(const TriggerAction& a) {
    Value b = Value::block();
    if (const auto* act = std::get_if<ActivateActor>(&a)) {
        b.set("kind", Value::of_symbol("activate_actor"));
        b.set("actor", Value::of_string(act->actor_id));
    } else if (const auto* sb = std::get_if<SetBehavior>(&a)) {
        b.set("kind", Value::of_symbol("set_behavior"));
        b.set("actor", Value::of_string(sb->actor_id));
        b.set("behavior", encode_behavior(sb->behavior));
    } else if (const auto* ai = std::get_if<ApplyImpulse>(&a)) {
        b.set("kind", Value::of_symbol("apply_impulse"));
        b.set("actor", Value::of_string(ai->actor_id));
        b.set("velocity", encode_point(ai->velocity));
    } else if (const auto* d = std::get_if<Despawn>(&a)) {
        b.set("kind", Value::of_symbol("despawn"));
        b.set("actor", Value::of_string(d->actor_id));
    }
    return b;
}

inline RoadMap decode_map(const Value& v) {
    const Value& b = get_block(v, "map");
    expect_keys(b, {"drivable", "lanes", "anchors"});
    RoadMap map;
    for (const Value& poly : get_list(require(b, "drivable"), "drivable").items) {
        const Value& pb = get_block(poly, "polygon");
        expect_keys(pb, {"points"});
        std::vector<Vec2> pts;
        for (const Value& p : get_list(require(pb, "points"), "points").items) {
            pts.push_back(decode_point(p));
        }
        map.drivable.push_back(std::move(pts));
    }
    if (const Value* lanes = b.find("lanes")) {
        for (const Value& lv : get_list(*lanes, "lanes").items) {
            const Value& lb = get_block(lv, "lane");
            expect_keys(lb, {"id", "points", "speed_limit", "one_way"});
            Lane lane;
            lane.id = get_string(require(lb, "id"), "lane id");
            for (const Value& p : get_list(require(lb, "points"), "points").items) {
                lane.centerline.push_back(decode_point(p));
            }
            lane.speed_limit = get_double(require(lb, "speed_limit"), "speed_limit");
            if (const Value* ow = lb.find("one_way")) lane.one_way = get_bool(*ow, "one_way");
            map.lanes.push_back(std::move(lane));
        }
    }
    if (const Value* anchors = b.find("anchors")) {
        for (const Value& av : get_list(*anchors, "anchors").items) {
            const Value& ab = get_block(av, "anchor");
            expect_keys(ab, {"name", "pose"});
            SpawnAnchor anchor;
            anchor.name = get_string(require(ab, "name"), "anchor name");
            anchor.pose = decode_pose(require(ab, "pose"));
            map.anchors.push_back(std::move(anchor));
        }
    }
    return map;
}

inline Value encode_map(const RoadMap& map) {
    Value b = Value::block();
    Value drivable = Value::list();
    for (const auto& poly : map.drivable) {
        Value pb = Value::block();
        Value pts = Value::list();
        for (const auto& p : poly) pts.items.push_back(encode_point(p));
        pb.set("points", std::move(pts));
        drivable.items.push_back(std::move(pb));
    }
    b.set("drivable", std::move(drivable));
    if (!map.lanes.empty()) {
        Value lanes = Value::list();
        for (const auto& lane : map.lanes) {
            Value lb = Value::block();
            lb.set("id", Value::of_string(lane.id));
            Value pts = Value::list();
            for (const auto& p : lane.centerline) pts.items.push_back(encode_point(p));
            lb.set("points", std::move(pts));
            lb.set("speed_limit", Value::of_float(lane.speed_limit));
            lb.set("one_way", Value::of_bool(lane.one_way));
            lanes.items.push_back(std::move(lb));
        }
        b.set("lanes", std::move(lanes));
    }
    if (!map.anchors.empty()) {
        Value anchors = Value::list();
        for (const auto& a : map.anchors) {
            Value ab = Value::block();
            ab.set("name", Value::of_string(a.name));
            ab.set("pose", encode_pose(a.pose));
            anchors.items.push_back(std::move(ab));
        }
        b.set("anchors", std::move(anchors));
    }
    return b;
}

inline ActorSpec decode_actor(const Value& v) {
    const Value& b = get_block(v, "actor");
    expect_keys(b, {"id", "class", "apparent", "spawn", "length", "width", "behavior", "active"});
    ActorSpec actor;
    actor.id = get_string(require(b, "id"), "actor id");
    const std::string cls = get_symbol(require(b, "class"), "class");
    const auto parsed = actor_class_from_token(cls);
    if (!parsed) fail(require(b, "class"), "unknown actor class '" + cls + "'");
    actor.true_class = *parsed;
    actor.apparent_class = actor.true_class;
    if (const Value* ap = b.find("apparent")) {
        const std::string apc = get_symbol(*ap, "apparent");
        const auto parsed_ap = actor_class_from_token(apc);
        if (!parsed_ap) fail(*ap, "unknown actor class '" + apc + "'");
        actor.apparent_class = *parsed_ap;
    }
    actor.spawn = decode_pose(require(b, "spawn"));
    actor.length = get_double(require(b, "length"), "length");
    actor.width = get_double(require(b, "width"), "width");
    if (const Value* beh = b.find("behavior")) actor.behavior = decode_behavior(*beh);
    if (const Value* act = b.find("active")) actor.initially_active = get_bool(*act, "active");
    return actor;
}

inline Value encode_actor(const ActorSpec& a) {
    Value b = Value::block();
    b.set("id", Value::of_string(a.id));
    b.set("class", Value::of_symbol(to_token(a.true_class)));
    if (a.apparent_class != a.true_class) {
        b.set("apparent", Value::of_symbol(to_token(a.apparent_class)));
    }
    b.set("spawn", encode_pose(a.spawn));
    b.set("length", Value::of_float(a.length));
    b.set("width", Value::of_float(a.width));
    b.set("behavior", encode_behavior(a.behavior));
    b.set("active", Value::of_bool(a.initially_active));
    return b;
}

inline EvaluationConstraints decode_constraints(const Value& v) {
    const Value& b = get_block(v, "constraints");
    expect_keys(b, {"mode", "end_on_collision", "failure_threshold", "weights"});
    EvaluationConstraints c;
    const std::string mode = get_symbol(require(b, "mode"), "mode");
    const auto parsed = evaluation_mode_from_token(mode);
    if (!parsed) fail(require(b, "mode"), "unknown evaluation mode '" + mode + "'");
    c.mode = *parsed;
    if (const Value* e = b.find("end_on_collision")) {
        c.end_on_collision = get_bool(*e, "end_on_collision");
    }
    if (const Value* f = b.find("failure_threshold")) {
        c.failure_threshold = get_double(*f, "failure_threshold");
    }
    if (const Value* w = b.find("weights")) {
        for (const auto& [key, val] : get_block(*w, "weights").entries) {
            const auto cls = actor_class_from_token(key);
            if (!cls) fail(val, "unknown actor class '" + key + "' in weights");
            c.weight_table[*cls] = get_double(val, key.c_str());
        }
    }
    return c;
}

inline Value encode_constraints(const EvaluationConstraints& c) {
    Value b = Value::block();
    b.set("mode", Value::of_symbol(to_token(c.mode)));
    b.set("end_on_collision", Value::of_bool(c.end_on_collision));
    b.set("failure_threshold", Value::of_float(c.failure_threshold));
    if (c.weight_table != default_weight_table()) {
        Value w = Value::block();
        for (const auto& [cls, weight] : c.weight_table) {
            w.set(to_token(cls), Value::of_float(weight));
        }
        b.set("weights", std::move(w));
    }
    return b;
}

}  // namespace codec_detail

/// Decode without validating (the validator CLI wants the raw spec).
inline ScenarioSpec decode_scenario(const Value& doc) {
    using namespace codec_detail;
    expect_keys(doc, {"schema_version", "scenario"});
    const std::int64_t version = get_int(require(doc, "schema_version"), "schema_version");
    if (version != kScenarioSchemaVersion) {
        fail(require(doc, "schema_version"),
             "unsupported schema_version " + std::to_string(version) + " (engine supports " +
                 std::to_string(kScenarioSchemaVersion) + ")");
    }
    const Value& s = get_block(require(doc, "scenario"), "scenario");
    expect_keys(s, {"id", "name", "category", "variant", "description", "map", "ego", "goal",
                    "actors", "triggers", "weather", "traffic_density", "t0", "tn",
                    "stationary_timeout", "constraints", "default_seed"});
    ScenarioSpec spec;
    spec.id = get_string(require(s, "id"), "id");
    spec.name = get_string(require(s, "name"), "name");
    const std::string cat = get_symbol(require(s, "category"), "category");
    const auto parsed_cat = category_from_token(cat);
    if (!parsed_cat) fail(require(s, "category"), "unknown category '" + cat + "'");
    spec.category = *parsed_cat;
    if (const Value* v = s.find("variant")) spec.variant = get_bool(*v, "variant");
    if (const Value* d = s.find("description")) spec.description = get_string(*d, "description");
    spec.map = decode_map(require(s, "map"));
    {
        const Value& ego = get_block(require(s, "ego"), "ego");
        expect_keys(ego, {"spawn", "initial_speed"});
        spec.ego.spawn = decode_pose(require(ego, "spawn"));
        if (const Value* v = ego.find("initial_speed")) {
            spec.ego.initial_speed = get_double(*v, "initial_speed");
        }
    }
    spec.goal_region = decode_rect(require(s, "goal"));
    if (const Value* actors = s.find("actors")) {
        for (const Value& a : get_list(*actors, "actors").items) {
            spec.actors.push_back(decode_actor(a));
        }
    }
    if (const Value* triggers = s.find("triggers")) {
        for (const Value& tv : get_list(*triggers, "triggers").items) {
            const Value& tb = get_block(tv, "trigger");
            expect_keys(tb, {"id", "conditions", "action", "one_shot"});
            TriggerSpec trig;
            trig.id = get_string(require(tb, "id"), "trigger id");
            for (const Value& c : get_list(require(tb, "conditions"), "conditions").items) {
                trig.conditions.push_back(decode_condition(c));
            }
            trig.action = decode_action(require(tb, "action"));
            if (const Value* os = tb.find("one_shot")) trig.one_shot = get_bool(*os, "one_shot");
            spec.triggers.push_back(std::move(trig));
        }
    }
    if (const Value* w = s.find("weather")) spec.weather = get_string(*w, "weather");
    if (const Value* td = s.find("traffic_density")) {
        const std::string tok = get_symbol(*td, "traffic_density");
        const auto parsed_td = density_from_token(tok);
        if (!parsed_td) fail(*td, "unknown traffic density '" + tok + "'");
        spec.traffic_density = *parsed_td;
    }
    if (const Value* v = s.find("t0")) spec.t0 = get_double(*v, "t0");
    spec.tn = get_double(require(s, "tn"), "tn");
    if (const Value* v = s.find("stationary_timeout")) {
        spec.stationary_timeout = get_double(*v, "stationary_timeout");
    }
    if (const Value* c = s.find("constraints")) {
        spec.constraints = decode_constraints(*c);
    }
    if (const Value* v = s.find("default_seed")) {
        const std::int64_t seed = get_int(*v, "default_seed");
        spec.default_seed = static_cast<std::uint64_t>(seed);
    }
    return spec;
}

inline Value encode_scenario(const ScenarioSpec& spec) {
    using namespace codec_detail;
    Value doc = Value::block();
    doc.set("schema_version", Value::of_int(kScenarioSchemaVersion));
    Value s = Value::block();
    s.set("id", Value::of_string(spec.id));
    s.set("name", Value::of_string(spec.name));
    s.set("category", Value::of_symbol(to_token(spec.category)));
    s.set("variant", Value::of_bool(spec.variant));
    if (!spec.description.empty()) s.set("description", Value::of_string(spec.description));
    s.set("map", encode_map(spec.map));
    {
        Value ego = Value::block();
        ego.set("spawn", encode_pose(spec.ego.spawn));
        ego.set("initial_speed", Value::of_float(spec.ego.initial_speed));
        s.set("ego", std::move(ego));
    }
    s.set("goal", encode_rect(spec.goal_region));
    if (!spec.actors.empty()) {
        Value actors = Value::list();
        for (const auto& a : spec.actors) actors.items.push_back(encode_actor(a));
        s.set("actors", std::move(actors));
    }
    if (!spec.triggers.empty()) {
        Value triggers = Value::list();
        for (const auto& t : spec.triggers) {
            Value tb = Value::block();
            tb.set("id", Value::of_string(t.id));
            Value conds = Value::list();
            for (const auto& c : t.conditions) conds.items.push_back(encode_condition(c));
            tb.set("conditions", std::move(conds));
            tb.set("action", encode_action(t.action));
            tb.set("one_shot", Value::of_bool(t.one_shot));
            triggers.items.push_back(std::move(tb));
        }
        s.set("triggers", std::move(triggers));
    }
    s.set("weather", Value::of_string(spec.weather));
    s.set("traffic_density", Value::of_symbol(to_token(spec.traffic_density)));
    s.set("t0", Value::of_float(spec.t0));
    s.set("tn", Value::of_float(spec.tn));
    s.set("stationary_timeout", Value::of_float(spec.stationary_timeout));
    s.set("constraints", encode_constraints(spec.constraints));
    s.set("default_seed", Value::of_int(static_cast<std::int64_t>(spec.default_seed)));
    doc.set("scenario", std::move(s));
    return doc;
}

/// Parse + decode + validate. Total over the grammar: anything that is not a
/// well-formed, invariant-clean scenario raises ParseError or SemanticError.
inline ScenarioSpec parse_scenario(std::string_view source) {
    bool blank = true;
    for (const char c : source) {
        if (c != ' ' && c != '\t' && c != '\r' && c != '\n') {
            blank = false;
            break;
        }
    }
    if (blank) throw ParseError(1, 1, "empty document");
    const Value doc = text::parse_document(source);
    ScenarioSpec spec = decode_scenario(doc);
    ValidationReport report = validate_scenario(spec);
    if (!report.ok()) throw SemanticError(std::move(report));
    return spec;
}

/// Canonical text form; parse(serialize(s)) is structurally equal to s.
inline std::string serialize_scenario(const ScenarioSpec& spec) {
    const ValidationReport report = validate_scenario(spec);
    if (!report.ok()) throw SemanticError(report);
    return text::write_document(encode_scenario(spec));
}

}  // namespace cornersim
