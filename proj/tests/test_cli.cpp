#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oukl/cli.hpp"

using namespace oukl;
namespace fs = std::filesystem;

namespace {

Json base_config(const std::string& suite) {
    Json j;
    j["model"] = Json{{"N", 2}, {"B", Json::array({Json::array({0.0, -1.0}),
                                                   Json::array({1.0, 0.0})})}};
    j["suite"] = suite;
    j["seed"] = 424242;
    j["mc"] = Json{{"n_paths", 500}, {"step", 0.05}, {"horizon", 10.0}};
    j["quadrature"] = Json{{"n_slices", 64}, {"n_per_slice", 24}};
    return j;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("oukl_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

int run_cli(const std::string& args, const fs::path& dir, std::string* out = nullptr) {
    const std::string out_file = (dir / "stdout.txt").string();
    const std::string cmd = std::string(OUKL_CLI_PATH) + " " + args + " > " + out_file +
                            " 2> " + (dir / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    if (out) {
        std::ifstream in(out_file);
        std::stringstream ss;
        ss << in.rdbuf();
        *out = ss.str();
    }
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("config parsing and validation") {
    SUBCASE("valid config round-trips") {
        const RunConfig cfg = parse_config(base_config("recurrence"));
        CHECK(cfg.n_dim == 2);
        CHECK(cfg.seed == 424242);
        CHECK(cfg.suite == "recurrence");
        CHECK(cfg.Q == Matrix::Identity(2, 2)); // defaulted
        CHECK(cfg.quadrature.n_slices == 64);
    }
    SUBCASE("seed is mandatory") {
        Json j = base_config("recurrence");
        j.erase("seed");
        CHECK_THROWS_WITH_AS((void)parse_config(j), doctest::Contains("seed"),
                             oukl::ConfigError);
    }
    SUBCASE("malformed B is named in the diagnostic") {
        Json j = base_config("recurrence");
        j["model"]["B"] = Json::array({Json::array({0.0, 1.0, 2.0}),
                                       Json::array({1.0, 0.0, 3.0})});
        CHECK_THROWS_WITH_AS((void)parse_config(j), doctest::Contains("model.B"),
                             oukl::ConfigError);
    }
    SUBCASE("unknown suite rejected at dispatch") {
        RunConfig cfg = parse_config(base_config("nonsense"));
        CHECK_THROWS_AS((void)run_suite(cfg), oukl::ConfigError);
    }
    SUBCASE("analytic suites require antisymmetric B") {
        Json j = base_config("mvf_check");
        j["model"]["B"] = Json::array({Json::array({0.0, 1.0}),
                                       Json::array({0.0, 0.0})});
        RunConfig cfg = parse_config(j);
        CHECK_THROWS_WITH_AS((void)run_suite(cfg), doctest::Contains("antisymmetric"),
                             oukl::ConfigError);
    }
}

TEST_CASE("suites pass on the rotation model") {
    SUBCASE("recurrence") {
        const SuiteOutput out = run_suite(parse_config(base_config("recurrence")));
        CHECK(out.report.overall_pass());
        REQUIRE(!out.report.records.empty());
        for (const auto& rec : out.report.records) CHECK(!rec.anchor.empty());
        // rotation drift: recurrent
        bool found = false;
        for (const auto& rec : out.report.records)
            if (rec.name == "verdict") {
                CHECK(rec.extra.at("verdict") == "recurrent");
                found = true;
            }
        CHECK(found);
    }
    SUBCASE("onion_theta") {
        Json j = base_config("onion_theta");
        j["mvf"] = Json{{"p", 5}, {"r_list", Json::array({0.5, 2.0})}};
        const SuiteOutput out = run_suite(parse_config(j));
        CHECK(out.report.overall_pass());
    }
    SUBCASE("mvf_check") {
        const SuiteOutput out = run_suite(parse_config(base_config("mvf_check")));
        CHECK(out.report.overall_pass());
        // normalization and all family exactness records present
        CHECK(out.report.records.size() >= 12);
    }
    SUBCASE("harnack") {
        const SuiteOutput out = run_suite(parse_config(base_config("harnack")));
        CHECK(out.report.overall_pass());
        bool has_ratio = false;
        for (const auto& rec : out.report.records)
            if (rec.name == "ratio bound") has_ratio = true;
        CHECK(has_ratio);
    }
    SUBCASE("liouville emits CSV rows") {
        const SuiteOutput out = run_suite(parse_config(base_config("liouville")));
        CHECK(out.report.overall_pass());
        CHECK(out.csv.find("t,u,gap") != std::string::npos);
        CHECK(std::count(out.csv.begin(), out.csv.end(), '\n') > 10);
    }
    SUBCASE("simulate") {
        const SuiteOutput out = run_suite(parse_config(base_config("simulate")));
        CHECK(out.report.overall_pass());
        CHECK(out.csv.rfind("t,x1,x2", 0) == 0);
    }
}

TEST_CASE("recurrence suite fails honestly on a Kalman-violating model") {
    Json j = base_config("recurrence");
    j["model"]["B"] = Json::array({Json::array({0.0, 0.0}), Json::array({0.0, 0.0})});
    j["model"]["Q"] = Json::array({Json::array({1.0, 0.0}), Json::array({0.0, 0.0})});
    const SuiteOutput out = run_suite(parse_config(j));
    CHECK_FALSE(out.report.overall_pass());
}

TEST_CASE("reports are canonically deterministic") {
    const SuiteOutput a = run_suite(parse_config(base_config("recurrence")));
    const SuiteOutput b = run_suite(parse_config(base_config("recurrence")));
    CHECK(to_json(a.report, false).dump(2) == to_json(b.report, false).dump(2));
}

TEST_CASE("command line end to end") {
    TempDir dir;
    const fs::path cfg_path = dir.path / "config.json";
    {
        std::ofstream f(cfg_path);
        f << base_config("recurrence").dump(2);
    }

    SUBCASE("runs, writes the report, exits 0") {
        const fs::path report_path = dir.path / "report.json";
        const int code = run_cli("--config " + cfg_path.string() + " --out " +
                                     report_path.string(),
                                 dir.path);
        CHECK(code == 0);
        const Json rep = Json::parse(slurp(report_path));
        CHECK(rep.at("overall_pass") == true);
        CHECK(rep.at("suite") == "recurrence");
        CHECK(rep.contains("timing"));
    }
    SUBCASE("byte-identical reports modulo timing") {
        const fs::path r1 = dir.path / "r1.json";
        const fs::path r2 = dir.path / "r2.json";
        CHECK(run_cli("--config " + cfg_path.string() + " --out " + r1.string(),
                      dir.path) == 0);
        CHECK(run_cli("--config " + cfg_path.string() + " --out " + r2.string(),
                      dir.path) == 0);
        Json a = Json::parse(slurp(r1));
        Json b = Json::parse(slurp(r2));
        a.erase("timing");
        b.erase("timing");
        CHECK(a.dump() == b.dump());
    }
    SUBCASE("malformed config exits 2 with a diagnostic naming the field") {
        Json bad = base_config("recurrence");
        bad["model"]["B"] = Json::array({Json::array({0.0, 1.0})}); // non-square
        const fs::path bad_path = dir.path / "bad.json";
        {
            std::ofstream f(bad_path);
            f << bad.dump();
        }
        const int code = run_cli("--config " + bad_path.string(), dir.path);
        CHECK(code == 2);
        const std::string err = slurp(dir.path / "stderr.txt");
        CHECK(err.find("model.B") != std::string::npos);
    }
    SUBCASE("missing config file exits 2") {
        CHECK(run_cli("--config " + (dir.path / "missing.json").string(), dir.path) ==
              2);
    }
    SUBCASE("internal failure exits 3") {
        // valid config, but path sampling only supports N <= 8
        Json big = base_config("simulate");
        Json rows = Json::array();
        for (int i = 0; i < 9; ++i) {
            Json row = Json::array();
            for (int j = 0; j < 9; ++j) row.push_back(0.0);
            rows.push_back(row);
        }
        big["model"] = Json{{"N", 9}, {"B", rows}};
        const fs::path big_path = dir.path / "big.json";
        {
            std::ofstream f(big_path);
            f << big.dump();
        }
        const int code = run_cli("--config " + big_path.string(), dir.path);
        CHECK(code == 3);
        CHECK(slurp(dir.path / "stderr.txt").find("internal") != std::string::npos);
    }
    SUBCASE("suite and seed overrides take effect") {
        const fs::path report_path = dir.path / "override.json";
        const int code =
            run_cli("--config " + cfg_path.string() + " --suite onion_theta --seed 7 " +
                        "--out " + report_path.string(),
                    dir.path);
        CHECK(code == 0);
        const Json rep = Json::parse(slurp(report_path));
        CHECK(rep.at("suite") == "onion_theta");
        CHECK(rep.at("config").at("seed") == 7);
    }
    SUBCASE("liouville writes the CSV side file") {
        Json j = base_config("liouville");
        const fs::path lcfg = dir.path / "liouville.json";
        {
            std::ofstream f(lcfg);
            f << j.dump();
        }
        const fs::path csv_path = dir.path / "rows.csv";
        const int code = run_cli("--config " + lcfg.string() + " --csv " +
                                     csv_path.string() + " --out " +
                                     (dir.path / "lreport.json").string(),
                                 dir.path);
        CHECK(code == 0);
        const std::string csv = slurp(csv_path);
        CHECK(csv.rfind("x1,x2,t,u,gap", 0) == 0);
    }
}
