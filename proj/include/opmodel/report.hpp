#pragma once

// Machine-readable verification reports.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace opmodel {

inline constexpr int report_schema_version = 1;

struct CheckRecord {
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    double runtime_ms = 0.0;
    bool at_least = false;  // pass means residual >= tolerance (a required gap)
};

/// A measured value that is reported but not asserted.
struct NoteRecord {
    std::string name;
    double value = 0.0;
};

struct VerificationReport {
    std::string suite;
    std::uint64_t seed = 0;
    nlohmann::json truncation = nlohmann::json::object();
    std::vector<CheckRecord> checks;
    std::vector<NoteRecord> notes;

    /// Records residual <= tolerance; non-finite residuals fail.
    CheckRecord& add(std::string name, double residual, double tolerance, double runtime_ms = 0.0) {
        const bool ok = std::isfinite(residual) && residual <= tolerance;
        checks.push_back({std::move(name), residual, tolerance, ok, runtime_ms});
        return checks.back();
    }

    /// Records value >= bound, for quantities that must stay away from zero.
    CheckRecord& add_at_least(std::string name, double value, double bound, double runtime_ms = 0.0) {
        const bool ok = std::isfinite(value) && value >= bound;
        checks.push_back({std::move(name), value, bound, ok, runtime_ms, true});
        return checks.back();
    }

    /// Times fn, which returns the residual.
    CheckRecord& measure(std::string name, double tolerance, const std::function<double()>& fn) {
        const auto start = std::chrono::steady_clock::now();
        const double residual = fn();
        const std::chrono::duration<double, std::milli> took = std::chrono::steady_clock::now() - start;
        return add(std::move(name), residual, tolerance, took.count());
    }

    void note(std::string name, double value) { notes.push_back({std::move(name), value}); }

    bool pass() const {
        return std::all_of(checks.begin(), checks.end(), [](const CheckRecord& c) { return c.pass; });
    }

    void merge(const VerificationReport& other) {
        checks.insert(checks.end(), other.checks.begin(), other.checks.end());
        notes.insert(notes.end(), other.notes.begin(), other.notes.end());
    }
};

namespace detail {

inline nlohmann::json finite_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

} // namespace detail

/// Checks and notes are sorted by name so that the output does not depend on execution order.
inline nlohmann::json report_to_json(const VerificationReport& r) {
    std::vector<CheckRecord> checks = r.checks;
    std::stable_sort(checks.begin(), checks.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    std::vector<NoteRecord> notes = r.notes;
    std::stable_sort(notes.begin(), notes.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    nlohmann::json cs = nlohmann::json::array();
    for (const auto& c : checks) {
        cs.push_back({{"name", c.name},
                      {"residual", detail::finite_or_null(c.residual)},
                      {"tolerance", c.tolerance},
                      {"comparison", c.at_least ? ">=" : "<="},
                      {"pass", c.pass},
                      {"runtime_ms", c.runtime_ms}});
    }
    nlohmann::json ns = nlohmann::json::array();
    for (const auto& n : notes) ns.push_back({{"name", n.name}, {"value", detail::finite_or_null(n.value)}});
    return {{"schema", report_schema_version},
            {"suite", r.suite},
            {"seed", r.seed},
            {"truncation", r.truncation},
            {"checks", std::move(cs)},
            {"notes", std::move(ns)},
            {"pass", r.pass()}};
}

/// Structural validation of a report document; returns an empty string when valid.
inline std::string report_schema_problem(const nlohmann::json& j) {
    if (!j.is_object()) return "report is not an object";
    if (!j.contains("schema") || j["schema"] != report_schema_version) return "missing or unknown schema version";
    if (!j.contains("suite") || !j["suite"].is_string()) return "missing suite";
    if (!j.contains("seed") || !j["seed"].is_number_unsigned()) return "missing seed";
    if (!j.contains("truncation") || !j["truncation"].is_object()) return "missing truncation";
    if (!j.contains("pass") || !j["pass"].is_boolean()) return "missing pass flag";
    if (!j.contains("checks") || !j["checks"].is_array()) return "missing checks";
    bool all = true;
    std::string previous;
    for (const auto& c : j["checks"]) {
        for (const char* key : {"name", "residual", "tolerance", "comparison", "pass", "runtime_ms"}) {
            if (!c.contains(key)) return std::string("check without ") + key;
        }
        if (!c["name"].is_string() || !c["pass"].is_boolean()) return "malformed check";
        if (!c["residual"].is_number()) return "non-finite residual in " + c["name"].get<std::string>();
        const auto name = c["name"].get<std::string>();
        if (name < previous) return "checks are not sorted by name";
        previous = name;
        all = all && c["pass"].get<bool>();
    }
    if (j["pass"].get<bool>() != all) return "overall pass differs from the conjunction of checks";
    return {};
}

/// Copy of a report document without runtime fields, for determinism comparisons.
inline nlohmann::json strip_runtimes(nlohmann::json j) {
    if (j.contains("checks")) {
        for (auto& c : j["checks"]) c.erase("runtime_ms");
    }
    return j;
}

} // namespace opmodel
