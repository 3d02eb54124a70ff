#include "oukl/report.hpp"

namespace oukl {

bool Report::overall_pass() const {
    for (const auto& rec : records)
        if (!rec.pass) return false;
    return true;
}

void Report::add(CheckRecord rec) { records.push_back(std::move(rec)); }

Json to_json(const Report& report, bool include_timing) {
    Json j;
    j["tool"] = report.tool;
    j["version"] = report.version;
    j["suite"] = report.suite;
    j["config"] = report.config_echo;
    Json recs = Json::array();
    for (const auto& rec : report.records) {
        Json r;
        r["name"] = rec.name;
        r["anchor"] = rec.anchor;
        r["value"] = rec.value;
        r["tolerance"] = rec.tolerance;
        r["pass"] = rec.pass;
        if (!rec.extra.empty()) r["extra"] = rec.extra;
        recs.push_back(std::move(r));
    }
    j["records"] = std::move(recs);
    j["overall_pass"] = report.overall_pass();
    if (include_timing) j["timing"] = Json{{"elapsed_seconds", report.elapsed_seconds}};
    return j;
}

std::string tool_version() { return "0.1.0"; }

} // namespace oukl
