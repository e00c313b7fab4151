// cornersim command line: catalog inspection, validation, single runs, batch
// matrices, replay and trace export.
//
// Exit codes are a stable contract:
//   0 success, 1 scenario failure, 2 usage/config error, 3 policy fault,
//   4 integrity failure, 5 engine version mismatch.

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "cornersim/cornersim.hpp"

namespace fs = std::filesystem;
using namespace cornersim;

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitScenarioFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitPolicyFault = 3;
constexpr int kExitIntegrity = 4;
constexpr int kExitVersion = 5;

std::string self_executable() {
    char buf[4096];
    const ssize_t n = readlink("/proc/self/exe", buf, sizeof(buf) - 1);
    if (n <= 0) return "cornersim";
    buf[n] = '\0';
    return buf;
}

Catalog load_catalog_or_die(const std::string& flag) {
    const fs::path dir = resolve_catalog_dir(flag);
    return load_catalog(dir);
}

int print_config_error(const std::string& message) {
    std::cerr << "error: " << message << "\n";
    return kExitUsage;
}

void print_result_summary(const ScenarioSpec& spec, const RunOutput& out) {
    const RunResult& r = out.result;
    std::cout << "scenario:     " << spec.id << "\n";
    std::cout << "outcome:      " << to_token(r.outcome) << "\n";
    if (r.terminal_reason) {
        std::cout << "terminated:   " << to_token(*r.terminal_reason) << "\n";
    }
    std::cout << "severity:     " << r.severity_score << "\n";
    std::cout << "collisions:   " << r.collisions.size();
    for (const auto& c : r.collisions) {
        std::cout << " [" << c.actor_id << ":" << to_token(c.actor_true_class) << "@" << c.tick
                  << "]";
    }
    std::cout << "\n";
    std::cout << "ticks:        " << r.metrics.ticks_elapsed << "\n";
    std::cout << "route:        " << std::fixed << std::setprecision(3)
              << r.metrics.route_completion << "\n";
    if (std::isfinite(r.metrics.min_distance_to_any_actor)) {
        std::cout << "min distance: " << r.metrics.min_distance_to_any_actor << " m\n";
    }
    if (r.metrics.min_time_to_collision) {
        std::cout << "min ttc:      " << *r.metrics.min_time_to_collision << " s\n";
    }
    std::cout.unsetf(std::ios::fixed);
    std::cout << "trace hash:   " << out.manifest.trace_hash_hex << "\n";
}

struct RunInvocation {
    std::string scenario;  // id or file path
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string weather;
    std::string density;
    std::string policy = "builtin:passive";
    std::string out_root = "runs";
    std::string run_dir;  // explicit cell directory (batch workers)
    std::string record = "lidar,detections,raster";
    std::string catalog_dir;
    double shift_all_timings = 0.0;
    int tick_timeout_ms = 50;
    double handshake_timeout_s = 5.0;
};

int do_run(const RunInvocation& inv) {
    // Resolve the scenario: a file path wins over a catalog id.
    ScenarioSpec base;
    try {
        if (inv.scenario.size() > 4 &&
            inv.scenario.substr(inv.scenario.size() - 4) == ".3cs" && fs::exists(inv.scenario)) {
            base = parse_scenario(read_file(inv.scenario));
        } else {
            const Catalog catalog = load_catalog_or_die(inv.catalog_dir);
            const ScenarioSpec* found = catalog.find(inv.scenario);
            if (found == nullptr) {
                return print_config_error("unknown scenario '" + inv.scenario + "'");
            }
            base = *found;
        }
    } catch (const std::exception& e) {
        return print_config_error(e.what());
    }

    Overrides overrides;
    if (!inv.weather.empty()) overrides.weather = inv.weather;
    if (!inv.density.empty()) {
        const auto d = density_from_token(inv.density);
        if (!d) return print_config_error("unknown density '" + inv.density + "'");
        overrides.traffic_density = d;
    }
    if (inv.shift_all_timings != 0.0) {
        overrides.trigger_shifts.push_back({"*", inv.shift_all_timings});
    }
    const std::uint64_t seed = inv.seed_set ? inv.seed : base.default_seed;
    overrides.seed = seed;

    const auto channels = RecordChannels::parse(inv.record);
    if (!channels) return print_config_error("bad --record list '" + inv.record + "'");

    const auto binding = PolicyBinding::parse(inv.policy);
    if (!binding) return print_config_error("bad policy '" + inv.policy + "'");

    RunConfig config;
    try {
        config.spec = apply_overrides(base, overrides);
    } catch (const OverrideError& e) {
        return print_config_error(e.what());
    }
    config.seed = seed;
    config.overrides = overrides_to_json(overrides);
    config.policy_descriptor = binding->descriptor();
    config.channels = *channels;
    config.render_rasters = channels->raster;

    PolicyBinding bound = *binding;
    bound.tick_timeout_ms = inv.tick_timeout_ms;
    bound.handshake_timeout_s = inv.handshake_timeout_s;

    std::unique_ptr<ActionSource> source;
    try {
        source = make_action_source(bound);
    } catch (const AgentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPolicyFault;
    }

    RunOutput out;
    try {
        out = run_simulation(config, *source);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    // Write the run directory.
    fs::path run_dir = inv.run_dir.empty()
                           ? fs::path(inv.out_root) / config.spec.id / std::to_string(seed)
                           : fs::path(inv.run_dir);
    try {
        write_file(run_dir / "manifest.json", out.manifest.to_json().dump(2) + "\n");
        write_file(run_dir / "trace.jsonl", out.trace.to_jsonl());
        write_file(run_dir / "trace.csv",
                   export_flat_csv(out.trace, config.spec.constraints.weight_table));
        if (config.channels.raster) {
            const RasterPack pack = export_raster_pack(out.rasters);
            write_file(run_dir / "rasters.bin", pack.bin);
            write_file(run_dir / "rasters.idx", pack.index);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    print_result_summary(config.spec, out);
    std::cout << "run dir:      " << run_dir.string() << "\n";

    switch (out.result.outcome) {
        case Outcome::Success: return kExitSuccess;
        case Outcome::PolicyFault: return kExitPolicyFault;
        default: return kExitScenarioFailure;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cornersim: deterministic corner-case driving scenarios"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("cornersim ") + kEngineVersion);

    std::string catalog_flag;
    app.add_option("--catalog", catalog_flag,
                   "catalog directory (default: $CORNERSIM_CATALOG or ./catalog)");

    // ---- list ----
    auto* list_cmd = app.add_subcommand("list", "list catalog scenarios");
    std::string list_category;
    std::string list_prefix;
    std::string list_text;
    list_cmd->add_option("--category", list_category, "filter by category");
    list_cmd->add_option("--prefix", list_prefix, "filter by id prefix");
    list_cmd->add_option("--contains", list_text, "filter by substring");

    // ---- validate ----
    auto* validate_cmd = app.add_subcommand("validate", "validate a scenario file");
    std::string validate_path;
    validate_cmd->add_option("file", validate_path, "scenario file (.3cs)")->required();

    // ---- run ----
    auto* run_cmd = app.add_subcommand("run", "run one scenario");
    RunInvocation inv;
    run_cmd->add_option("scenario", inv.scenario, "scenario id or .3cs file")->required();
    auto* seed_opt = run_cmd->add_option("--seed", inv.seed, "run seed");
    run_cmd->add_option("--weather", inv.weather, "weather preset override");
    run_cmd->add_option("--density", inv.density, "traffic density override");
    run_cmd->add_option("--policy", inv.policy, "builtin:<name> or exec:<command>");
    run_cmd->add_option("--out", inv.out_root, "output root (default runs)");
    run_cmd->add_option("--run-dir", inv.run_dir, "explicit run directory");
    run_cmd->add_option("--record", inv.record, "channels: lidar,detections,raster or none");
    run_cmd->add_option("--shift-timings", inv.shift_all_timings,
                        "shift all time triggers by this many seconds");
    run_cmd->add_option("--tick-timeout-ms", inv.tick_timeout_ms,
                        "external agent per-tick timeout");
    run_cmd->add_option("--handshake-timeout", inv.handshake_timeout_s,
                        "external agent handshake timeout (s)");

    // ---- batch ----
    auto* batch_cmd = app.add_subcommand("batch", "run a matrix of cells");
    std::string matrix_path;
    int jobs = 1;
    batch_cmd->add_option("matrix", matrix_path, "matrix file")->required();
    batch_cmd->add_option("--jobs", jobs, "parallel worker processes");

    // ---- replay ----
    auto* replay_cmd = app.add_subcommand("replay", "replay a recorded run");
    std::string manifest_path;
    replay_cmd->add_option("manifest", manifest_path, "manifest.json path")->required();

    // ---- export ----
    auto* export_cmd = app.add_subcommand("export", "export a trace to another format");
    std::string trace_path;
    std::string format = "flat-csv";
    std::string export_out;
    export_cmd->add_option("trace", trace_path, "trace.jsonl path")->required();
    export_cmd->add_option("--format", format, "full-jsonl | flat-csv | raster-pack");
    export_cmd->add_option("--out", export_out, "output file (raster-pack: basename)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (list_cmd->parsed()) {
            CatalogFilter filter;
            if (!list_category.empty()) {
                const auto c = category_from_token(list_category);
                if (!c) return print_config_error("unknown category '" + list_category + "'");
                filter.category = c;
            }
            filter.id_prefix = list_prefix;
            filter.text = list_text;
            const Catalog catalog = load_catalog_or_die(catalog_flag);
            const auto rows = query_catalog(catalog, filter);
            size_t id_width = 2;
            for (const auto& row : rows) id_width = std::max(id_width, row.id.size());
            for (const auto& row : rows) {
                std::cout << std::left << std::setw(static_cast<int>(id_width) + 2) << row.id
                          << std::setw(26) << to_token(row.category) << row.name << "\n";
            }
            std::cout << rows.size() << " scenario(s)\n";
            return kExitSuccess;
        }

        if (validate_cmd->parsed()) {
            std::string source;
            try {
                source = read_file(validate_path);
            } catch (const std::exception& e) {
                return print_config_error(e.what());
            }
            try {
                const ScenarioSpec spec = parse_scenario(source);
                std::cout << "OK " << spec.id << "\n";
                return kExitSuccess;
            } catch (const SemanticError& e) {
                for (const auto& v : e.report.violations) {
                    std::cout << v.code << ": " << v.message << "\n";
                }
                return kExitUsage;
            } catch (const ParseError& e) {
                std::cout << "PARSE_ERROR " << e.what() << "\n";
                return kExitUsage;
            }
        }

        if (run_cmd->parsed()) {
            inv.seed_set = seed_opt->count() > 0;
            inv.catalog_dir = catalog_flag;
            return do_run(inv);
        }

        if (batch_cmd->parsed()) {
            std::string source;
            try {
                source = read_file(matrix_path);
            } catch (const std::exception& e) {
                return print_config_error(e.what());
            }
            BatchMatrix matrix;
            std::vector<BatchCell> cells;
            const Catalog catalog = load_catalog_or_die(catalog_flag);
            try {
                matrix = parse_matrix(source);
                cells = expand_matrix(matrix, catalog);
            } catch (const std::exception& e) {
                return print_config_error(e.what());
            }
            std::cout << "matrix: " << cells.size() << " cells, jobs=" << jobs << "\n";
            const std::string catalog_dir = resolve_catalog_dir(catalog_flag).string();
            const auto results =
                run_batch(cells, matrix.policy, matrix.output_root, catalog_dir, jobs,
                          self_executable());
            bool all_completed = true;
            std::cout << std::left << std::setw(28) << "scenario" << std::setw(18) << "weather"
                      << std::setw(8) << "seed" << std::setw(8) << "density" << std::setw(20)
                      << "outcome" << "severity\n";
            for (const auto& r : results) {
                std::cout << std::left << std::setw(28) << r.cell.scenario_id << std::setw(18)
                          << r.cell.weather << std::setw(8) << r.cell.seed << std::setw(8)
                          << to_token(r.cell.density) << std::setw(20) << r.outcome << r.severity
                          << "\n";
                if (r.exit_code != kExitSuccess && r.exit_code != kExitScenarioFailure &&
                    r.exit_code != kExitPolicyFault) {
                    all_completed = false;
                }
            }
            const fs::path summary = fs::path(matrix.output_root) / "summary.csv";
            write_file(summary, batch_summary_csv(results));
            std::cout << "summary: " << summary.string() << "\n";
            return all_completed ? kExitSuccess : kExitScenarioFailure;
        }

        if (replay_cmd->parsed()) {
            RunManifest manifest;
            Trace trace;
            try {
                manifest = RunManifest::from_json(nlohmann::json::parse(read_file(manifest_path)));
                const fs::path trace_path_p = fs::path(manifest_path).parent_path() / "trace.jsonl";
                trace = Trace::from_jsonl(read_file(trace_path_p));
            } catch (const std::exception& e) {
                return print_config_error(e.what());
            }
            const Catalog catalog = load_catalog_or_die(catalog_flag);
            const ScenarioSpec* base = catalog.find(manifest.scenario_id);
            if (base == nullptr) {
                return print_config_error("scenario '" + manifest.scenario_id +
                                          "' not in catalog");
            }
            try {
                const ReplayOutcome outcome = replay(manifest, trace, *base);
                if (outcome.hash_matches && outcome.result_matches) {
                    std::cout << "replay OK: hash " << outcome.replay_hash << "\n";
                    return kExitSuccess;
                }
                if (!outcome.hash_matches) {
                    std::cout << "replay DIVERGED at tick "
                              << (outcome.first_divergent_tick ? *outcome.first_divergent_tick
                                                               : -1)
                              << "\n";
                } else {
                    std::cout << "replay hash matches but result differs\n";
                }
                return kExitIntegrity;
            } catch (const VersionError& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kExitVersion;
            } catch (const IntegrityError& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kExitIntegrity;
            }
        }

        if (export_cmd->parsed()) {
            Trace trace;
            try {
                trace = Trace::from_jsonl(read_file(trace_path));
            } catch (const std::exception& e) {
                return print_config_error(e.what());
            }
            const fs::path in_path(trace_path);
            if (format == "full-jsonl") {
                const fs::path out_path =
                    export_out.empty() ? in_path.parent_path() / "trace.export.jsonl" : fs::path(export_out);
                write_file(out_path, trace.canonical_bytes());
                std::cout << out_path.string() << "\n";
                return kExitSuccess;
            }
            if (format == "flat-csv") {
                const Catalog catalog = load_catalog_or_die(catalog_flag);
                const ScenarioSpec* base = catalog.find(trace.header().scenario_id);
                const auto weights = base != nullptr ? base->constraints.weight_table
                                                     : default_weight_table();
                const fs::path out_path =
                    export_out.empty() ? in_path.parent_path() / "trace.export.csv" : fs::path(export_out);
                write_file(out_path, export_flat_csv(trace, weights));
                std::cout << out_path.string() << "\n";
                return kExitSuccess;
            }
            if (format == "raster-pack") {
                const Catalog catalog = load_catalog_or_die(catalog_flag);
                const ScenarioSpec* base = catalog.find(trace.header().scenario_id);
                if (base == nullptr) {
                    return print_config_error("scenario '" + trace.header().scenario_id +
                                              "' not in catalog; cannot re-render rasters");
                }
                Overrides overrides = overrides_from_json(trace.header().overrides);
                overrides.seed = trace.header().seed;
                const ScenarioSpec spec = apply_overrides(*base, overrides);
                const WeatherPreset* weather = find_weather(spec.weather);
                if (weather == nullptr) return print_config_error("unknown weather in trace");
                // Rebuild world geometry per tick from the recorded states.
                std::vector<OccupancyRaster> rasters;
                WorldState world = init_world(spec, trace.header().seed);
                for (const auto& rec : trace.records()) {
                    world.ego = rec.ego;
                    for (const auto& [id, st] : rec.actor_states) {
                        auto it = world.actor_states.find(id);
                        if (it != world.actor_states.end()) it->second = st;
                    }
                    rasters.push_back(render_occupancy(world, *weather, spec.map));
                }
                const RasterPack pack = export_raster_pack(rasters);
                const fs::path base_path =
                    export_out.empty() ? in_path.parent_path() / "rasters" : fs::path(export_out);
                write_file(base_path.string() + ".bin", pack.bin);
                write_file(base_path.string() + ".idx", pack.index);
                std::cout << base_path.string() << ".bin\n";
                return kExitSuccess;
            }
            return print_config_error("unknown format '" + format + "'");
        }
    } catch (const CatalogError& e) {
        return print_config_error(e.what());
    } catch (const std::exception& e) {
        return print_config_error(e.what());
    }
    return kExitUsage;
}
