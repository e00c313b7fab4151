#pragma once

// Batch matrices: a scenario selector crossed with weather, seed, density and
// trigger-shift axes, executed by a bounded pool of worker processes (one
// engine instance per worker, nothing shared), so per-cell results cannot
// depend on --jobs or scheduling order.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cornersim/catalog.hpp"
#include "cornersim/text.hpp"
#include "cornersim/validate.hpp"

namespace cornersim {

struct BatchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BatchMatrix {
    std::vector<std::string> scenario_ids;  // resolved against the catalog
    std::optional<CornerCaseCategory> category;
    std::vector<std::string> weathers;
    std::vector<std::uint64_t> seeds;
    std::vector<TrafficDensity> densities;
    std::vector<double> trigger_shifts = {0.0};
    std::string policy = "builtin:passive";
    std::string output_root = "runs";
};

struct BatchCell {
    std::string scenario_id;
    std::string weather;
    std::uint64_t seed = 0;
    TrafficDensity density = TrafficDensity::None;
    double trigger_shift = 0.0;

    /// Directory slug under output_root/<scenario-id>/.
    std::string slug() const {
        std::ostringstream oss;
        oss << seed << "-" << weather << "-" << to_token(density);
        if (trigger_shift != 0.0) {
            nlohmann::json j = trigger_shift;
            oss << "-t" << j.dump();
        }
        return oss.str();
    }
};

inline BatchMatrix parse_matrix(const std::string& source) {
    using text::Value;
    const Value doc = text::parse_document(source);
    const Value* mv = doc.find("matrix");
    const Value* sv = doc.find("schema_version");
    if (sv == nullptr || sv->kind != Value::Kind::Int || sv->int_value != 1) {
        throw BatchError("matrix file needs schema_version 1");
    }
    if (mv == nullptr || mv->kind != Value::Kind::Block) {
        throw BatchError("matrix file needs a 'matrix' block");
    }
    for (const auto& [key, val] : mv->entries) {
        static const char* allowed[] = {"scenarios", "category",       "weathers", "seeds",
                                        "densities", "trigger_shifts", "policy",   "output_root"};
        if (std::none_of(std::begin(allowed), std::end(allowed),
                         [&](const char* a) { return key == a; })) {
            throw text::ParseError(val.line, val.column, "unknown key '" + key + "'");
        }
    }
    BatchMatrix m;
    if (const Value* ids = mv->find("scenarios")) {
        for (const auto& item : ids->items) {
            if (item.kind != Value::Kind::String) throw BatchError("scenario ids must be strings");
            m.scenario_ids.push_back(item.text);
        }
    }
    if (const Value* cat = mv->find("category")) {
        if (cat->kind != Value::Kind::Symbol) throw BatchError("category must be a bare word");
        const auto parsed = category_from_token(cat->text);
        if (!parsed) throw BatchError("unknown category '" + cat->text + "'");
        m.category = parsed;
    }
    if (m.scenario_ids.empty() && !m.category) {
        throw BatchError("matrix needs 'scenarios' or 'category'");
    }
    const Value* weathers = mv->find("weathers");
    if (weathers == nullptr || weathers->items.empty()) {
        throw BatchError("matrix axis 'weathers' must be a non-empty list");
    }
    for (const auto& w : weathers->items) {
        const std::string id = w.kind == Value::Kind::String ? w.text : w.text;
        if (w.kind != Value::Kind::String && w.kind != Value::Kind::Symbol) {
            throw BatchError("weather entries must be names");
        }
        if (find_weather(id) == nullptr) throw BatchError("unknown weather preset '" + id + "'");
        m.weathers.push_back(id);
    }
    const Value* seeds = mv->find("seeds");
    if (seeds == nullptr || seeds->items.empty()) {
        throw BatchError("matrix axis 'seeds' must be a non-empty list");
    }
    for (const auto& s : seeds->items) {
        if (s.kind != Value::Kind::Int || s.int_value < 0) {
            throw BatchError("seeds must be non-negative integers");
        }
        m.seeds.push_back(static_cast<std::uint64_t>(s.int_value));
    }
    const Value* densities = mv->find("densities");
    if (densities == nullptr || densities->items.empty()) {
        throw BatchError("matrix axis 'densities' must be a non-empty list");
    }
    for (const auto& d : densities->items) {
        if (d.kind != Value::Kind::Symbol) throw BatchError("densities must be bare words");
        const auto parsed = density_from_token(d.text);
        if (!parsed) throw BatchError("unknown density '" + d.text + "'");
        m.densities.push_back(*parsed);
    }
    if (const Value* shifts = mv->find("trigger_shifts")) {
        m.trigger_shifts.clear();
        for (const auto& s : shifts->items) {
            if (!s.is_number()) throw BatchError("trigger shifts must be numbers");
            m.trigger_shifts.push_back(s.as_double());
        }
        if (m.trigger_shifts.empty()) {
            throw BatchError("matrix axis 'trigger_shifts' must be non-empty when present");
        }
    }
    if (const Value* p = mv->find("policy")) {
        if (p->kind != Value::Kind::String) throw BatchError("policy must be a string");
        m.policy = p->text;
    }
    if (const Value* o = mv->find("output_root")) {
        if (o->kind != Value::Kind::String) throw BatchError("output_root must be a string");
        m.output_root = o->text;
    }
    return m;
}

/// Cartesian expansion in a fixed order (scenario, weather, seed, density,
/// shift); the order is part of the summary-file contract.
inline std::vector<BatchCell> expand_matrix(const BatchMatrix& m, const Catalog& catalog) {
    std::vector<std::string> ids = m.scenario_ids;
    if (m.category) {
        for (const ScenarioSpec* s : catalog.in_category(*m.category)) {
            ids.push_back(s->id);
        }
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (const auto& id : ids) {
        if (catalog.find(id) == nullptr) {
            throw BatchError("matrix references unknown scenario '" + id + "'");
        }
    }
    if (ids.empty()) throw BatchError("matrix selects no scenarios");
    std::vector<BatchCell> cells;
    for (const auto& id : ids) {
        for (const auto& w : m.weathers) {
            for (const auto& seed : m.seeds) {
                for (const auto& d : m.densities) {
                    for (const double shift : m.trigger_shifts) {
                        cells.push_back({id, w, seed, d, shift});
                    }
                }
            }
        }
    }
    return cells;
}

struct CellResult {
    BatchCell cell;
    int exit_code = -1;
    std::string outcome = "error";
    double severity = 0.0;
    std::string trace_hash;
    std::string run_dir;
};

/// Run every cell as a child process `self run ...`, at most `jobs` at once.
/// Returns per-cell results in expansion order regardless of completion
/// order. Child stdout/stderr go to a log file inside the run directory.
inline std::vector<CellResult> run_batch(const std::vector<BatchCell>& cells,
                                         const std::string& policy,
                                         const std::string& output_root,
                                         const std::string& catalog_dir, int jobs,
                                         const std::string& self_exe) {
    namespace fs = std::filesystem;
    std::vector<CellResult> results(cells.size());
    std::map<pid_t, size_t> running;
    size_t next = 0;
    jobs = std::max(1, jobs);

    auto launch = [&](size_t index) {
        const BatchCell& cell = cells[index];
        CellResult& res = results[index];
        res.cell = cell;
        const fs::path run_dir = fs::path(output_root) / cell.scenario_id / cell.slug();
        fs::create_directories(run_dir);
        res.run_dir = run_dir.string();
        const fs::path log_path = run_dir / "run.log";

        const pid_t pid = fork();
        if (pid < 0) throw BatchError("fork failed");
        if (pid == 0) {
            FILE* log = std::fopen(log_path.c_str(), "w");
            if (log != nullptr) {
                dup2(fileno(log), STDOUT_FILENO);
                dup2(fileno(log), STDERR_FILENO);
            }
            std::vector<std::string> args = {self_exe,
                                             "run",
                                             cell.scenario_id,
                                             "--seed",
                                             std::to_string(cell.seed),
                                             "--weather",
                                             cell.weather,
                                             "--density",
                                             to_token(cell.density),
                                             "--policy",
                                             policy,
                                             "--out",
                                             output_root,
                                             "--run-dir",
                                             run_dir.string(),
                                             "--catalog",
                                             catalog_dir};
            if (cell.trigger_shift != 0.0) {
                args.push_back("--shift-timings");
                nlohmann::json j = cell.trigger_shift;
                args.push_back(j.dump());
            }
            std::vector<char*> argv;
            argv.reserve(args.size() + 1);
            for (auto& a : args) argv.push_back(a.data());
            argv.push_back(nullptr);
            execv(self_exe.c_str(), argv.data());
            _exit(126);
        }
        running[pid] = index;
    };

    auto reap_one = [&]() {
        int status = 0;
        const pid_t pid = waitpid(-1, &status, 0);
        if (pid < 0) throw BatchError("waitpid failed");
        const auto it = running.find(pid);
        if (it == running.end()) return;
        CellResult& res = results[it->second];
        res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128;
        running.erase(it);
        // Pick up the manifest the child wrote.
        const fs::path manifest_path = fs::path(res.run_dir) / "manifest.json";
        if (fs::exists(manifest_path)) {
            try {
                const auto j = nlohmann::json::parse(read_file(manifest_path));
                res.trace_hash = j.value("trace_hash", "");
                if (j.contains("result")) {
                    res.outcome = j["result"].value("outcome", "error");
                    res.severity = j["result"].value("severity_score", 0.0);
                }
            } catch (...) {
                res.outcome = "error";
            }
        }
    };

    while (next < cells.size() || !running.empty()) {
        while (next < cells.size() && static_cast<int>(running.size()) < jobs) {
            launch(next++);
        }
        if (!running.empty()) reap_one();
    }
    return results;
}

/// Machine-readable batch summary (one row per cell, expansion order).
inline std::string batch_summary_csv(const std::vector<CellResult>& results) {
    std::string out =
        "scenario,weather,seed,density,trigger_shift,outcome,severity,exit_code,trace_hash\n";
    for (const auto& r : results) {
        nlohmann::json shift = r.cell.trigger_shift;
        nlohmann::json severity = r.severity;
        out += r.cell.scenario_id;
        out.push_back(',');
        out += r.cell.weather;
        out.push_back(',');
        out += std::to_string(r.cell.seed);
        out.push_back(',');
        out += to_token(r.cell.density);
        out.push_back(',');
        out += shift.dump();
        out.push_back(',');
        out += r.outcome;
        out.push_back(',');
        out += severity.dump();
        out.push_back(',');
        out += std::to_string(r.exit_code);
        out.push_back(',');
        out += r.trace_hash;
        out.push_back('\n');
    }
    return out;
}

}  // namespace cornersim
