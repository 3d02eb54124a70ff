#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace oukl {

using Json = nlohmann::ordered_json;

/// One verification record: a named check with the identity it probes, the
/// measured value, its tolerance and the verdict.
struct CheckRecord {
    std::string name;
    std::string anchor; ///< the identity or bound being checked
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    Json extra = Json::object();
};

struct Report {
    std::string tool = "oukl";
    std::string version;
    std::string suite;
    Json config_echo = Json::object();
    std::vector<CheckRecord> records;
    double elapsed_seconds = 0.0;

    bool overall_pass() const;
    void add(CheckRecord rec);
};

/// include_timing = false yields the canonical form used for determinism
/// comparisons (timing excluded).
Json to_json(const Report& report, bool include_timing = true);

std::string tool_version();

} // namespace oukl
