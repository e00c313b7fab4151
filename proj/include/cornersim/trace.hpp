#pragma once

// Per-tick run records, canonical JSONL serialization, content hashing and
// the three export formats. Canonical bytes (sorted keys, shortest
// round-trip floats, no wall-clock anywhere) are what make trace hashes
// meaningful across runs.

#include <openssl/evp.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cornersim/evaluation.hpp"
#include "cornersim/perception.hpp"
#include "cornersim/policy.hpp"
#include "cornersim/validate.hpp"
#include "cornersim/version.hpp"
#include "cornersim/world.hpp"

namespace cornersim {

struct TraceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Which observation channels are recorded into tick records.
struct RecordChannels {
    bool lidar = true;
    bool detections = true;
    bool raster = true;  // rasters are re-rendered at export time

    std::string to_string() const {
        std::string out;
        if (lidar) out += "lidar";
        if (detections) out += out.empty() ? "detections" : ",detections";
        if (raster) out += out.empty() ? "raster" : ",raster";
        return out.empty() ? "none" : out;
    }

    static std::optional<RecordChannels> parse(const std::string& csv) {
        RecordChannels ch{false, false, false};
        if (csv == "none") return ch;
        std::stringstream ss(csv);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item == "lidar") {
                ch.lidar = true;
            } else if (item == "detections") {
                ch.detections = true;
            } else if (item == "raster") {
                ch.raster = true;
            } else if (!item.empty()) {
                return std::nullopt;
            }
        }
        return ch;
    }

    bool operator==(const RecordChannels&) const = default;
};

struct TraceHeader {
    std::string scenario_id;
    std::uint64_t seed = 0;
    nlohmann::json overrides = nlohmann::json::object();
    std::string policy;
    std::string engine_version = kEngineVersion;
    int schema_version = kTraceSchemaVersion;
    double dt = kTickSeconds;
    RecordChannels channels;
};

struct ActionRecord {
    EgoAction action;          // as received (after substitution, if any)
    bool substituted = false;  // protocol timeout/garbage replaced by Stop
    bool turn_fallback = false;
};

struct TickRecord {
    long tick = 0;
    KinematicState ego;
    std::vector<std::pair<std::string, KinematicState>> actor_states;  // id-sorted
    Observation observation;
    ActionRecord action;
    ContinuousControl control;  // resolved continuous control
    std::vector<WorldEvent> events;
    std::optional<std::string> terminal;  // set on the final record
};

// ---------------------------------------------------------------------------
// JSON encoding (canonical: nlohmann objects are key-sorted; doubles dump as
// shortest round-trip decimals)
// ---------------------------------------------------------------------------

namespace trace_json {

inline nlohmann::json kinematic(const KinematicState& st) {
    return {{"x", st.pose.x},         {"y", st.pose.y},
            {"heading", st.pose.heading}, {"speed", st.speed},
            {"steer", st.steer_angle},    {"height", st.height},
            {"vz", st.vertical_speed},    {"active", st.active}};
}

inline KinematicState kinematic_from(const nlohmann::json& j) {
    KinematicState st;
    st.pose.x = j.at("x").get<double>();
    st.pose.y = j.at("y").get<double>();
    st.pose.heading = j.at("heading").get<double>();
    st.speed = j.at("speed").get<double>();
    st.steer_angle = j.at("steer").get<double>();
    st.height = j.at("height").get<double>();
    st.vertical_speed = j.at("vz").get<double>();
    st.active = j.at("active").get<bool>();
    return st;
}

inline nlohmann::json event(const WorldEvent& e) {
    nlohmann::json j = {{"tick", e.tick}, {"kind", to_token(e.kind)}, {"subject", e.subject}};
    if (e.collision) {
        j["collision"] = {{"actor", e.collision->actor_id},
                          {"class", to_token(e.collision->actor_true_class)},
                          {"relative_speed", e.collision->relative_speed},
                          {"penetration", e.collision->penetration_depth}};
    }
    return j;
}

inline nlohmann::json action(const ActionRecord& a) {
    nlohmann::json j;
    if (a.action.discrete) {
        j["discrete"] = to_token(*a.action.discrete);
    } else if (a.action.continuous) {
        j["throttle"] = a.action.continuous->throttle;
        j["brake"] = a.action.continuous->brake;
        j["steer"] = a.action.continuous->steer;
    }
    if (a.substituted) j["substituted"] = true;
    if (a.turn_fallback) j["turn_fallback"] = true;
    return j;
}

inline ActionRecord action_from(const nlohmann::json& j) {
    ActionRecord rec;
    if (j.contains("discrete")) {
        const auto a = discrete_from_token(j["discrete"].get<std::string>());
        if (!a) throw TraceError("unknown discrete action in trace");
        rec.action = EgoAction::of(*a);
    } else {
        ContinuousControl c;
        c.throttle = j.value("throttle", 0.0);
        c.brake = j.value("brake", 0.0);
        c.steer = j.value("steer", 0.0);
        rec.action = EgoAction::of(c);
    }
    rec.substituted = j.value("substituted", false);
    rec.turn_fallback = j.value("turn_fallback", false);
    return rec;
}

inline WorldEvent event_from(const nlohmann::json& j) {
    WorldEvent e;
    e.tick = j.at("tick").get<long>();
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "trigger_fired") {
        e.kind = WorldEventKind::TriggerFired;
    } else if (kind == "collision") {
        e.kind = WorldEventKind::Collision;
    } else if (kind == "actor_activated") {
        e.kind = WorldEventKind::ActorActivated;
    } else if (kind == "actor_despawned") {
        e.kind = WorldEventKind::ActorDespawned;
    } else if (kind == "goal_reached") {
        e.kind = WorldEventKind::GoalReached;
    } else {
        throw TraceError("unknown event kind in trace: " + kind);
    }
    e.subject = j.at("subject").get<std::string>();
    if (j.contains("collision")) {
        CollisionEvent c;
        c.tick = e.tick;
        c.actor_id = j["collision"].at("actor").get<std::string>();
        const auto cls = actor_class_from_token(j["collision"].at("class").get<std::string>());
        if (!cls) throw TraceError("unknown actor class in trace collision");
        c.actor_true_class = *cls;
        c.relative_speed = j["collision"].at("relative_speed").get<double>();
        c.penetration_depth = j["collision"].at("penetration").get<double>();
        e.collision = c;
    }
    return e;
}

inline Observation observation_from(const nlohmann::json& j) {
    Observation obs;
    obs.tick = j.at("tick").get<long>();
    obs.ego_pose.x = j.at("ego").at("x").get<double>();
    obs.ego_pose.y = j.at("ego").at("y").get<double>();
    obs.ego_pose.heading = j.at("ego").at("heading").get<double>();
    obs.ego_speed = j.at("ego").at("speed").get<double>();
    obs.ego_steer = j.at("ego").at("steer").get<double>();
    if (j.contains("lidar")) obs.lidar = j["lidar"].get<std::vector<double>>();
    if (j.contains("detections")) {
        for (const auto& dj : j["detections"]) {
            Detection d;
            d.handle = dj.at("id").get<std::string>();
            const auto cls = actor_class_from_token(dj.at("class").get<std::string>());
            if (!cls) throw TraceError("unknown detection class in trace");
            d.apparent_class = *cls;
            d.relative_position.x = dj.at("x").get<double>();
            d.relative_position.y = dj.at("y").get<double>();
            d.relative_heading = dj.at("heading").get<double>();
            d.length = dj.at("length").get<double>();
            d.width = dj.at("width").get<double>();
            d.relative_speed = dj.at("range_rate").get<double>();
            d.distance = dj.at("distance").get<double>();
            obs.detections.push_back(std::move(d));
        }
    }
    obs.weather_id = j.at("weather").get<std::string>();
    obs.goal_bearing = j.at("goal").at("bearing").get<double>();
    obs.goal_distance = j.at("goal").at("distance").get<double>();
    return obs;
}

inline nlohmann::json observation(const Observation& obs, const RecordChannels& channels) {
    nlohmann::json j;
    j["tick"] = obs.tick;
    j["ego"] = {{"x", obs.ego_pose.x},
                {"y", obs.ego_pose.y},
                {"heading", obs.ego_pose.heading},
                {"speed", obs.ego_speed},
                {"steer", obs.ego_steer}};
    if (channels.lidar) j["lidar"] = obs.lidar;
    if (channels.detections) {
        nlohmann::json dets = nlohmann::json::array();
        for (const auto& d : obs.detections) {
            dets.push_back({{"id", d.handle},
                            {"class", to_token(d.apparent_class)},
                            {"x", d.relative_position.x},
                            {"y", d.relative_position.y},
                            {"heading", d.relative_heading},
                            {"length", d.length},
                            {"width", d.width},
                            {"range_rate", d.relative_speed},
                            {"distance", d.distance}});
        }
        j["detections"] = std::move(dets);
    }
    j["weather"] = obs.weather_id;
    j["goal"] = {{"bearing", obs.goal_bearing}, {"distance", obs.goal_distance}};
    return j;
}

}  // namespace trace_json

class Trace {
public:
    Trace() = default;
    explicit Trace(TraceHeader header) : header_(std::move(header)) {}

    const TraceHeader& header() const { return header_; }
    const std::vector<TickRecord>& records() const { return records_; }
    bool empty() const { return records_.empty(); }

    /// Append-only; records must arrive with contiguous ticks from 0. A gap
    /// means an engine bug, not bad input.
    void record_tick(TickRecord record) {
        const long expected = static_cast<long>(records_.size());
        if (record.tick != expected) {
            throw TraceError("tick record out of order: got " + std::to_string(record.tick) +
                             ", expected " + std::to_string(expected));
        }
        records_.push_back(std::move(record));
    }

    nlohmann::json header_json() const {
        nlohmann::json j;
        j["scenario_id"] = header_.scenario_id;
        j["seed"] = header_.seed;
        j["overrides"] = header_.overrides;
        j["policy"] = header_.policy;
        j["engine_version"] = header_.engine_version;
        j["schema_version"] = header_.schema_version;
        j["dt"] = header_.dt;
        j["channels"] = header_.channels.to_string();
        return j;
    }

    nlohmann::json record_json(const TickRecord& r) const {
        nlohmann::json j;
        j["tick"] = r.tick;
        j["ego"] = trace_json::kinematic(r.ego);
        nlohmann::json actors = nlohmann::json::object();
        for (const auto& [id, st] : r.actor_states) actors[id] = trace_json::kinematic(st);
        j["actors"] = std::move(actors);
        j["observation"] = trace_json::observation(r.observation, header_.channels);
        j["action"] = trace_json::action(r.action);
        j["control"] = {{"throttle", r.control.throttle},
                        {"brake", r.control.brake},
                        {"steer", r.control.steer}};
        nlohmann::json events = nlohmann::json::array();
        for (const auto& e : r.events) events.push_back(trace_json::event(e));
        j["events"] = std::move(events);
        if (r.terminal) j["terminal"] = *r.terminal;
        return j;
    }

    /// Canonical serialization: header line then one line per tick record.
    std::string to_jsonl() const {
        std::string out = header_json().dump();
        out.push_back('\n');
        for (const auto& r : records_) {
            out += record_json(r).dump();
            out.push_back('\n');
        }
        return out;
    }

    static Trace from_jsonl(const std::string& text) {
        std::istringstream in(text);
        std::string line;
        if (!std::getline(in, line)) throw TraceError("empty trace file");
        nlohmann::json h;
        try {
            h = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw TraceError(std::string("bad trace header: ") + e.what());
        }
        TraceHeader header;
        header.scenario_id = h.at("scenario_id").get<std::string>();
        header.seed = h.at("seed").get<std::uint64_t>();
        header.overrides = h.at("overrides");
        header.policy = h.at("policy").get<std::string>();
        header.engine_version = h.at("engine_version").get<std::string>();
        header.schema_version = h.at("schema_version").get<int>();
        header.dt = h.at("dt").get<double>();
        const auto channels = RecordChannels::parse(h.at("channels").get<std::string>());
        if (!channels) throw TraceError("bad channels field in trace header");
        header.channels = *channels;
        Trace trace(header);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw TraceError(std::string("bad tick record: ") + e.what());
            }
            TickRecord r;
            r.tick = j.at("tick").get<long>();
            r.ego = trace_json::kinematic_from(j.at("ego"));
            for (const auto& [id, st] : j.at("actors").items()) {
                r.actor_states.emplace_back(id, trace_json::kinematic_from(st));
            }
            r.observation = trace_json::observation_from(j.at("observation"));
            r.action = trace_json::action_from(j.at("action"));
            r.control.throttle = j.at("control").at("throttle").get<double>();
            r.control.brake = j.at("control").at("brake").get<double>();
            r.control.steer = j.at("control").at("steer").get<double>();
            for (const auto& ej : j.at("events")) {
                r.events.push_back(trace_json::event_from(ej));
            }
            if (j.contains("terminal")) r.terminal = j["terminal"].get<std::string>();
            trace.records_.push_back(std::move(r));
            trace.raw_lines_.push_back(line);
        }
        trace.raw_header_line_ = h.dump();
        return trace;
    }

    /// Byte stream used for hashing. For traces loaded from disk the original
    /// lines are reused so hashes stay stable even if this build would format
    /// records differently.
    std::string canonical_bytes() const {
        if (!raw_lines_.empty() || !raw_header_line_.empty()) {
            std::string out = raw_header_line_;
            out.push_back('\n');
            for (const auto& l : raw_lines_) {
                out += l;
                out.push_back('\n');
            }
            return out;
        }
        return to_jsonl();
    }

private:
    TraceHeader header_;
    std::vector<TickRecord> records_;
    std::vector<std::string> raw_lines_;  // set when loaded from disk
    std::string raw_header_line_;
};

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

inline std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
        if (ctx) EVP_MD_CTX_free(ctx);
        throw TraceError("sha256 failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

/// Content hash over the canonical serialization (header + tick records).
inline std::string trace_hash(const Trace& trace) {
    return sha256_hex(trace.canonical_bytes());
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

struct RunManifest {
    std::string scenario_id;
    std::uint64_t seed = 0;
    nlohmann::json overrides = nlohmann::json::object();
    std::string policy;
    std::string engine_version = kEngineVersion;
    std::string trace_hash_hex;
    nlohmann::json result_summary = nlohmann::json::object();
    std::string created_at;  // wall clock; never hashed

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["scenario_id"] = scenario_id;
        j["seed"] = seed;
        j["overrides"] = overrides;
        j["policy"] = policy;
        j["engine_version"] = engine_version;
        j["trace_hash"] = trace_hash_hex;
        j["result"] = result_summary;
        j["created_at"] = created_at;
        return j;
    }

    static RunManifest from_json(const nlohmann::json& j) {
        RunManifest m;
        m.scenario_id = j.at("scenario_id").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.overrides = j.at("overrides");
        m.policy = j.at("policy").get<std::string>();
        m.engine_version = j.at("engine_version").get<std::string>();
        m.trace_hash_hex = j.at("trace_hash").get<std::string>();
        m.result_summary = j.at("result");
        m.created_at = j.value("created_at", "");
        return m;
    }
};

inline nlohmann::json result_to_json(const RunResult& r) {
    nlohmann::json j;
    j["outcome"] = to_token(r.outcome);
    j["severity_score"] = r.severity_score;
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : r.collisions) {
        cols.push_back({{"tick", c.tick},
                        {"actor", c.actor_id},
                        {"class", to_token(c.actor_true_class)},
                        {"relative_speed", c.relative_speed},
                        {"penetration", c.penetration_depth}});
    }
    j["collisions"] = std::move(cols);
    j["metrics"] = {{"route_completion", r.metrics.route_completion},
                    {"min_distance_to_any_actor",
                     std::isfinite(r.metrics.min_distance_to_any_actor)
                         ? nlohmann::json(r.metrics.min_distance_to_any_actor)
                         : nlohmann::json()},
                    {"ticks_elapsed", r.metrics.ticks_elapsed},
                    {"min_time_to_collision", r.metrics.min_time_to_collision
                                                  ? nlohmann::json(*r.metrics.min_time_to_collision)
                                                  : nlohmann::json()}};
    if (r.terminal_reason) j["terminal_reason"] = to_token(*r.terminal_reason);
    return j;
}

// ---------------------------------------------------------------------------
// Exports
// ---------------------------------------------------------------------------

/// flat-csv schema v1 column order. Lossy by design: scalar channels only.
inline const char* kFlatCsvHeader =
    "tick,sim_time,ego_x,ego_y,ego_heading,ego_speed,ego_steer,action,throttle,brake,steer,"
    "trigger_fired,collision,goal_reached,n_active_actors,n_detections,min_lidar,severity_delta";

inline std::string format_double(double v) {
    nlohmann::json j = v;
    return j.dump();
}

inline std::string export_flat_csv(const Trace& trace,
                                   const std::map<ActorClass, double>& weight_table) {
    std::string out = kFlatCsvHeader;
    out.push_back('\n');
    const double dt = trace.header().dt;
    for (const auto& r : trace.records()) {
        bool trigger_fired = false;
        bool collision = false;
        bool goal = false;
        double severity_delta = 0.0;
        for (const auto& e : r.events) {
            switch (e.kind) {
                case WorldEventKind::TriggerFired: trigger_fired = true; break;
                case WorldEventKind::Collision:
                    collision = true;
                    if (e.collision) {
                        severity_delta += severity(e.collision->actor_true_class, weight_table);
                    }
                    break;
                case WorldEventKind::GoalReached: goal = true; break;
                default: break;
            }
        }
        int active = 0;
        for (const auto& [id, st] : r.actor_states) {
            if (st.active) ++active;
        }
        double min_lidar = std::numeric_limits<double>::infinity();
        for (const double v : r.observation.lidar) min_lidar = std::min(min_lidar, v);
        std::string action = "continuous";
        ContinuousControl control = r.control;
        if (r.action.action.discrete) action = to_token(*r.action.action.discrete);
        out += std::to_string(r.tick);
        out.push_back(',');
        out += format_double(static_cast<double>(r.tick) * dt);
        out.push_back(',');
        out += format_double(r.ego.pose.x);
        out.push_back(',');
        out += format_double(r.ego.pose.y);
        out.push_back(',');
        out += format_double(r.ego.pose.heading);
        out.push_back(',');
        out += format_double(r.ego.speed);
        out.push_back(',');
        out += format_double(r.ego.steer_angle);
        out.push_back(',');
        out += action;
        out.push_back(',');
        out += format_double(control.throttle);
        out.push_back(',');
        out += format_double(control.brake);
        out.push_back(',');
        out += format_double(control.steer);
        out.push_back(',');
        out += trigger_fired ? "1" : "0";
        out.push_back(',');
        out += collision ? "1" : "0";
        out.push_back(',');
        out += goal ? "1" : "0";
        out.push_back(',');
        out += std::to_string(active);
        out.push_back(',');
        out += std::to_string(r.observation.detections.size());
        out.push_back(',');
        out += std::isfinite(min_lidar) ? format_double(min_lidar) : "";
        out.push_back(',');
        out += format_double(severity_delta);
        out.push_back('\n');
    }
    return out;
}

/// Raster pack: per tick a 4-byte little-endian record length followed by
/// row-major one-byte cell codes; the index file lists "tick offset length".
struct RasterPack {
    std::string bin;
    std::string index;
};

inline RasterPack export_raster_pack(const std::vector<OccupancyRaster>& rasters) {
    RasterPack pack;
    std::uint64_t offset = 0;
    for (size_t tick = 0; tick < rasters.size(); ++tick) {
        const auto& cells = rasters[tick].cells;
        const std::uint32_t len = static_cast<std::uint32_t>(cells.size());
        char lenbuf[4] = {static_cast<char>(len & 0xFF), static_cast<char>((len >> 8) & 0xFF),
                          static_cast<char>((len >> 16) & 0xFF),
                          static_cast<char>((len >> 24) & 0xFF)};
        pack.bin.append(lenbuf, 4);
        pack.bin.append(reinterpret_cast<const char*>(cells.data()), cells.size());
        pack.index += std::to_string(tick);
        pack.index.push_back(' ');
        pack.index += std::to_string(offset);
        pack.index.push_back(' ');
        pack.index += std::to_string(len);
        pack.index.push_back('\n');
        offset += 4 + len;
    }
    return pack;
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw TraceError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw TraceError("short write to " + path.string());
}

}  // namespace cornersim
