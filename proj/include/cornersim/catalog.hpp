#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cornersim/scenario_codec.hpp"

namespace cornersim {

struct CatalogError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr int kCatalogSize = 32;

struct ScenarioSummary {
    std::string id;
    std::string name;
    CornerCaseCategory category = CornerCaseCategory::StateAnomaly;
    std::string description;  // first line only
    bool variant = false;
};

class Catalog {
public:
    Catalog() = default;
    explicit Catalog(std::vector<ScenarioSpec> scenarios) : scenarios_(std::move(scenarios)) {
        std::sort(scenarios_.begin(), scenarios_.end(),
                  [](const ScenarioSpec& a, const ScenarioSpec& b) { return a.id < b.id; });
        for (size_t i = 0; i < scenarios_.size(); ++i) {
            by_id_[scenarios_[i].id] = i;
            by_category_[scenarios_[i].category].push_back(i);
        }
    }

    const std::vector<ScenarioSpec>& scenarios() const { return scenarios_; }
    size_t size() const { return scenarios_.size(); }

    const ScenarioSpec* find(const std::string& id) const {
        auto it = by_id_.find(id);
        return it == by_id_.end() ? nullptr : &scenarios_[it->second];
    }

    std::vector<const ScenarioSpec*> in_category(CornerCaseCategory c) const {
        std::vector<const ScenarioSpec*> out;
        auto it = by_category_.find(c);
        if (it != by_category_.end()) {
            for (size_t i : it->second) out.push_back(&scenarios_[i]);
        }
        return out;
    }

private:
    std::vector<ScenarioSpec> scenarios_;
    std::map<std::string, size_t> by_id_;
    std::map<CornerCaseCategory, std::vector<size_t>> by_category_;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CatalogError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Load every .3cs file under `dir` (recursively; the shipped layout is
/// catalog/<category>/<id>.3cs). In strict mode the catalog contract is
/// enforced: exactly 32 scenarios, unique ids, every category non-empty.
inline Catalog load_catalog(const std::filesystem::path& dir, bool strict = true) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) {
        throw CatalogError("catalog directory not found: " + dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".3cs") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());

    std::vector<ScenarioSpec> specs;
    std::map<std::string, fs::path> seen;
    for (const auto& file : files) {
        ScenarioSpec spec;
        try {
            spec = parse_scenario(read_file(file));
        } catch (const ParseError& e) {
            throw CatalogError(file.string() + ":" + e.what());
        } catch (const SemanticError& e) {
            std::string detail;
            for (const auto& v : e.report.violations) {
                detail += "\n  " + v.code + ": " + v.message;
            }
            throw CatalogError(file.string() + ": invalid scenario" + detail);
        }
        auto [it, inserted] = seen.emplace(spec.id, file);
        if (!inserted) {
            throw CatalogError("duplicate scenario id '" + spec.id + "' in " + file.string() +
                               " (already defined in " + it->second.string() + ")");
        }
        specs.push_back(std::move(spec));
    }

    if (strict) {
        if (specs.size() != kCatalogSize) {
            throw CatalogError("catalog must contain exactly " + std::to_string(kCatalogSize) +
                               " scenarios, found " + std::to_string(specs.size()));
        }
        bool have[3] = {false, false, false};
        for (const auto& s : specs) have[static_cast<int>(s.category)] = true;
        if (!have[0] || !have[1] || !have[2]) {
            throw CatalogError("catalog must cover all three corner-case categories");
        }
    }
    return Catalog(std::move(specs));
}

struct CatalogFilter {
    std::optional<CornerCaseCategory> category;
    std::string id_prefix;
    std::string text;  // case-sensitive substring over id/name/description
};

/// Stable lexicographic-by-id listing; an empty filter returns everything.
inline std::vector<ScenarioSummary> query_catalog(const Catalog& catalog,
                                                  const CatalogFilter& filter = {}) {
    std::vector<ScenarioSummary> out;
    for (const auto& s : catalog.scenarios()) {
        if (filter.category && s.category != *filter.category) continue;
        if (!filter.id_prefix.empty() && s.id.rfind(filter.id_prefix, 0) != 0) continue;
        if (!filter.text.empty()) {
            const bool hit = s.id.find(filter.text) != std::string::npos ||
                             s.name.find(filter.text) != std::string::npos ||
                             s.description.find(filter.text) != std::string::npos;
            if (!hit) continue;
        }
        ScenarioSummary sum;
        sum.id = s.id;
        sum.name = s.name;
        sum.category = s.category;
        sum.variant = s.variant;
        const auto nl = s.description.find('\n');
        sum.description = nl == std::string::npos ? s.description : s.description.substr(0, nl);
        out.push_back(std::move(sum));
    }
    return out;
}

/// Resolve the catalog directory: explicit flag, CORNERSIM_CATALOG, ./catalog.
inline std::filesystem::path resolve_catalog_dir(const std::string& flag_value = "") {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("CORNERSIM_CATALOG")) {
        if (*env) return env;
    }
    return "catalog";
}

}  // namespace cornersim
