#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "oukl/mvf.hpp"
#include "oukl/report.hpp"

namespace oukl {

struct McConfig {
    std::int64_t n_paths = 4000;
    double step = 1e-2;
    double horizon = 50.0;
};

struct MvfSuiteConfig {
    int p = 5;
    std::vector<double> r_list{0.1, 1.0, 10.0};
};

/// Parsed and validated run configuration. The seed is mandatory: reports
/// must be reproducible, so there is no wall-clock fallback.
struct RunConfig {
    int n_dim = 0;
    Matrix B;
    Matrix Q;
    std::string suite;
    std::uint64_t seed = 0;
    QuadratureConfig quadrature;
    bool quadrature_given = false;
    McConfig mc;
    MvfSuiteConfig mvf;
    std::string out_path;
    std::string csv_path;
    Json echo = Json::object();

    DriftModel model() const;
};

/// Throws ConfigError with the offending field named in the message.
RunConfig parse_config(const Json& raw);
RunConfig load_config_file(const std::string& path);

struct SuiteOutput {
    Report report;
    std::string csv; ///< empty when the suite emits no tabular data
};

SuiteOutput run_suite(const RunConfig& cfg);

SuiteOutput cmd_mvf_check(const RunConfig& cfg);
SuiteOutput cmd_onion_theta(const RunConfig& cfg);
SuiteOutput cmd_harnack(const RunConfig& cfg);
SuiteOutput cmd_liouville(const RunConfig& cfg);
SuiteOutput cmd_recurrence(const RunConfig& cfg);
SuiteOutput cmd_simulate(const RunConfig& cfg);

/// Full command-line entry point. Exit codes: 0 all checks pass, 1 suite
/// failure, 2 configuration error, 3 internal error.
int cli_main(int argc, const char* const* argv);

} // namespace oukl
