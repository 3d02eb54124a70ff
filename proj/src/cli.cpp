#include "oukl/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>

#include "oukl/errors.hpp"
#include "oukl/harnack.hpp"
#include "oukl/matexp.hpp"
#include "oukl/onion_geometry.hpp"
#include "oukl/ou.hpp"
#include "oukl/rng.hpp"

namespace oukl {
namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Matrix parse_matrix(const Json& j, const std::string& field, int expect_n) {
    if (!j.is_array() || j.empty())
        throw ConfigError(field + ": expected a non-empty array of rows");
    const int rows = static_cast<int>(j.size());
    int cols = -1;
    for (const auto& row : j) {
        if (!row.is_array()) throw ConfigError(field + ": rows must be arrays");
        if (cols < 0)
            cols = static_cast<int>(row.size());
        else if (static_cast<int>(row.size()) != cols)
            throw ConfigError(field + ": ragged rows");
    }
    if (rows != cols) throw ConfigError(field + ": matrix must be square");
    if (expect_n > 0 && rows != expect_n)
        throw ConfigError(field + ": size does not match model.N");
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int k = 0; k < cols; ++k) {
            const auto& cell = j[i][k];
            if (!cell.is_number()) throw ConfigError(field + ": entries must be numbers");
            m(i, k) = cell.get<double>();
            if (!std::isfinite(m(i, k))) throw ConfigError(field + ": non-finite entry");
        }
    return m;
}

Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (int i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

void require_antisymmetric_suite(const RunConfig& cfg) {
    DriftModel m = cfg.model();
    if (!m.antisymmetric())
        throw ConfigError("model.B: suite '" + cfg.suite + "' requires antisymmetric B");
}

CheckRecord make_record(std::string name, std::string anchor, double value,
                        double tolerance, bool pass) {
    CheckRecord rec;
    rec.name = std::move(name);
    rec.anchor = std::move(anchor);
    rec.value = value;
    rec.tolerance = tolerance;
    rec.pass = pass;
    return rec;
}

Report make_report(const RunConfig& cfg) {
    Report rep;
    rep.version = tool_version();
    rep.suite = cfg.suite;
    rep.config_echo = cfg.echo;
    return rep;
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

constexpr const char* kAnchorNormalization =
    "(1/r) int_{Omega_r^(p)(z0)} W_r^(p)(z0^-1 o z) dz = 1";
constexpr const char* kAnchorMeanValue =
    "u(z0) = (1/r) int_{Omega_r^(p)(z0)} u(z) W_r^(p)(z0^-1 o z) dz";
constexpr const char* kAnchorTwoOnion =
    "Omega_{theta r}^(p)(0) contains Omega_r^(p)(z) for z in Sigma_r";
constexpr const char* kAnchorRatioBound =
    "W_{2theta r}^(p)(z0^-1 o zeta) / W_r^(p)(z^-1 o zeta) >= 2theta/C";
constexpr const char* kAnchorLowerBound =
    "W_{2theta r}^(p) >= c_p r^{(p-2)/(p+N)} on Omega_r^(p)";
constexpr const char* kAnchorUpperBound =
    "K_1, K_2 <= c_p r^{(p-2)/(N+p)} on Omega_r^(p)(z)";
constexpr const char* kAnchorHarnack = "u(z) <= C u(z0) for z in P(z0)";
constexpr const char* kAnchorLiouville = "u(x,t) -> inf u as t -> -inf";
constexpr const char* kAnchorKalman = "rank[Q, BQ, ..., B^{N-1}Q] = N";
constexpr const char* kAnchorHr = "B ~ diag(B0 stable, B1 rotation of dim <= 2)";
constexpr const char* kAnchorIntegral = "int_1^inf det(Q_t)^{-1/2} dt = inf";
constexpr const char* kAnchorSampler = "X_{t+h} = e^{hB} X_t + N(0, Q_h)";
constexpr const char* kAnchorHitting = "phi_O(x) = P(tau_O^x < inf)";
constexpr const char* kAnchorOccupation = "E[J_A^x] = int_0^T P_t 1_A(x) dt";
constexpr const char* kAnchorExcessive = "P_r phi <= phi and P_s phi -> phi (s -> 0)";

} // namespace

DriftModel RunConfig::model() const {
    try {
        return DriftModel(B, Q);
    } catch (const InvalidInput& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
}

RunConfig parse_config(const Json& raw) {
    if (!raw.is_object()) throw ConfigError("config: expected a JSON object");
    RunConfig cfg;

    if (!raw.contains("model") || !raw["model"].is_object())
        throw ConfigError("model: missing or not an object");
    const Json& jm = raw["model"];
    int n_hint = 0;
    if (jm.contains("N")) {
        if (!jm["N"].is_number_integer() || jm["N"].get<int>() < 1)
            throw ConfigError("model.N: must be a positive integer");
        n_hint = jm["N"].get<int>();
    }
    if (!jm.contains("B")) throw ConfigError("model.B: missing");
    cfg.B = parse_matrix(jm["B"], "model.B", n_hint);
    cfg.n_dim = static_cast<int>(cfg.B.rows());
    cfg.Q = jm.contains("Q") ? parse_matrix(jm["Q"], "model.Q", cfg.n_dim)
                             : Matrix::Identity(cfg.n_dim, cfg.n_dim);

    if (raw.contains("suite")) {
        if (!raw["suite"].is_string()) throw ConfigError("suite: must be a string");
        cfg.suite = raw["suite"].get<std::string>();
    }

    if (!raw.contains("seed"))
        throw ConfigError("seed: mandatory (reports must be reproducible)");
    if (!raw["seed"].is_number_unsigned() && !raw["seed"].is_number_integer())
        throw ConfigError("seed: must be an unsigned integer");
    cfg.seed = raw["seed"].get<std::uint64_t>();

    cfg.quadrature = default_quadrature(cfg.n_dim);
    if (raw.contains("quadrature")) {
        const Json& q = raw["quadrature"];
        if (!q.is_object()) throw ConfigError("quadrature: must be an object");
        cfg.quadrature_given = true;
        if (q.contains("scheme")) {
            const std::string s = q["scheme"].get<std::string>();
            if (s == "tensor-grid")
                cfg.quadrature.scheme = QuadScheme::TensorGrid;
            else if (s == "monte-carlo")
                cfg.quadrature.scheme = QuadScheme::MonteCarlo;
            else
                throw ConfigError("quadrature.scheme: expected tensor-grid|monte-carlo");
        }
        if (q.contains("n_slices")) cfg.quadrature.n_slices = q["n_slices"].get<int>();
        if (q.contains("n_per_slice"))
            cfg.quadrature.n_per_slice = q["n_per_slice"].get<int>();
        if (cfg.quadrature.n_slices < 1 || cfg.quadrature.n_per_slice < 1)
            throw ConfigError("quadrature: counts must be >= 1");
    }
    cfg.quadrature.seed = cfg.seed;

    if (raw.contains("mc")) {
        const Json& m = raw["mc"];
        if (!m.is_object()) throw ConfigError("mc: must be an object");
        if (m.contains("n_paths")) cfg.mc.n_paths = m["n_paths"].get<std::int64_t>();
        if (m.contains("step")) cfg.mc.step = m["step"].get<double>();
        if (m.contains("horizon")) cfg.mc.horizon = m["horizon"].get<double>();
        if (cfg.mc.n_paths < 1 || !(cfg.mc.step > 0.0) || !(cfg.mc.horizon > 0.0))
            throw ConfigError("mc: n_paths, step, horizon must be positive");
    }

    if (raw.contains("mvf")) {
        const Json& m = raw["mvf"];
        if (!m.is_object()) throw ConfigError("mvf: must be an object");
        if (m.contains("p")) cfg.mvf.p = m["p"].get<int>();
        if (cfg.mvf.p < 1) throw ConfigError("mvf.p: must be >= 1");
        if (m.contains("r_list")) {
            cfg.mvf.r_list.clear();
            for (const auto& v : m["r_list"]) {
                const double r = v.get<double>();
                if (!(r > 0.0)) throw ConfigError("mvf.r_list: values must be positive");
                cfg.mvf.r_list.push_back(r);
            }
            if (cfg.mvf.r_list.empty()) throw ConfigError("mvf.r_list: empty");
        }
    }

    if (raw.contains("out")) cfg.out_path = raw["out"].get<std::string>();
    if (raw.contains("csv")) cfg.csv_path = raw["csv"].get<std::string>();

    // canonical echo, rebuilt from parsed values
    Json echo;
    echo["model"] = Json{{"N", cfg.n_dim},
                         {"B", matrix_to_json(cfg.B)},
                         {"Q", matrix_to_json(cfg.Q)}};
    echo["suite"] = cfg.suite;
    echo["seed"] = cfg.seed;
    echo["quadrature"] =
        Json{{"scheme", cfg.quadrature.scheme == QuadScheme::TensorGrid ? "tensor-grid"
                                                                        : "monte-carlo"},
             {"n_slices", cfg.quadrature.n_slices},
             {"n_per_slice", cfg.quadrature.n_per_slice}};
    echo["mc"] = Json{{"n_paths", cfg.mc.n_paths},
                      {"step", cfg.mc.step},
                      {"horizon", cfg.mc.horizon}};
    Json r_list = Json::array();
    for (const double r : cfg.mvf.r_list) r_list.push_back(r);
    echo["mvf"] = Json{{"p", cfg.mvf.p}, {"r_list", r_list}};
    cfg.echo = echo;
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    Json raw;
    try {
        in >> raw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    return parse_config(raw);
}

SuiteOutput cmd_mvf_check(const RunConfig& cfg) {
    require_antisymmetric_suite(cfg);
    Timer timer;
    Report rep = make_report(cfg);
    const DriftModel model = cfg.model();
    const int p = cfg.mvf.p;
    QuadratureConfig quad = cfg.quadrature;

    for (const double r : cfg.mvf.r_list) {
        const OnionSpec spec(group_identity(cfg.n_dim), r, p, model);
        const NormalizationReport nr = onion_volume_weight_check(spec, quad);
        CheckRecord rec = make_record("normalization r=" + fmt17(r), kAnchorNormalization,
                                      nr.deviation, 2e-3, nr.deviation <= 2e-3);
        rec.extra = Json{{"value", nr.value}, {"error_estimate", nr.error_estimate}};
        rep.add(std::move(rec));
    }

    std::vector<std::pair<std::string, FamilyKind>> kinds = {
        {"constants", FamilyKind::Constants},
        {"quadratic", FamilyKind::QuadraticHeat},
        {"mixtures", FamilyKind::FundamentalMixtures},
    };
    if (!drift_kernel_basis(model).empty())
        kinds.emplace_back("exponential", FamilyKind::Exponential);

    Rng rng = Rng::stream(cfg.seed, 0xabc);
    for (const auto& [label, kind] : kinds) {
        const HarmonicFamily family = test_family(model, kind, -30.0, cfg.seed);
        const auto& member = family.members.front();
        for (int trial = 0; trial < 3; ++trial) {
            GroupPoint z0{2.0 * rng.in_ball(cfg.n_dim), rng.uniform(-1.0, 1.0)};
            const double r = std::exp(rng.uniform(std::log(0.5), std::log(2.0)));
            const OnionSpec spec(z0, r, p, model);
            const MeanValueResult mv = mean_value(member.field, spec, quad);
            const double expected = member.field(z0.x, z0.t);
            const double scale = std::max({mv.field_scale, std::abs(expected), 1e-30});
            const double tol = std::max(2e-3 * scale, mv.error_estimate);
            const double dev = std::abs(mv.value - expected);
            CheckRecord rec = make_record(label + " exactness #" + std::to_string(trial),
                                          kAnchorMeanValue, dev, tol, dev <= tol);
            rec.extra = Json{{"r", r},
                             {"u_at_center", expected},
                             {"mean_value", mv.value},
                             {"error_estimate", mv.error_estimate}};
            rep.add(std::move(rec));
        }
    }
    rep.elapsed_seconds = timer.seconds();
    return SuiteOutput{std::move(rep), ""};
}

SuiteOutput cmd_onion_theta(const RunConfig& cfg) {
    require_antisymmetric_suite(cfg);
    Timer timer;
    Report rep = make_report(cfg);
    const DriftModel model = cfg.model();
    const int p = cfg.mvf.p;
    const double theta_ref = analytic_theta(cfg.n_dim, p);

    const auto reports = two_onion_sweep(cfg.mvf.r_list, model, p, 8, cfg.seed);
    for (const double r : cfg.mvf.r_list) {
        double max_emp = 0.0;
        int count = 0;
        for (const auto& tr : reports) {
            if (tr.r == r) {
                max_emp = std::max(max_emp, tr.theta_empirical);
                ++count;
            }
        }
        CheckRecord rec = make_record("theta_empirical r=" + fmt17(r), kAnchorTwoOnion,
                                      max_emp, theta_ref, max_emp <= theta_ref);
        rec.extra = Json{{"samples", count}, {"theta_analytic", theta_ref}};
        rep.add(std::move(rec));
    }
    rep.elapsed_seconds = timer.seconds();
    return SuiteOutput{std::move(rep), ""};
}

SuiteOutput cmd_harnack(const RunConfig& cfg) {
    require_antisymmetric_suite(cfg);
    if (cfg.mvf.p <= 4)
        throw ConfigError("mvf.p: the harnack suite requires p > 4");
    Timer timer;
    Report rep = make_report(cfg);
    const DriftModel model = cfg.model();
    const int p = cfg.mvf.p;
    const KernelSampleWindow window;

    const HarnackConstant hc =
        assemble_harnack_constant(p, model, cfg.mvf.r_list, 8, window, cfg.seed);
    {
        CheckRecord rec = make_record("ratio bound", kAnchorRatioBound, hc.min_ratio,
                                      0.0, hc.min_ratio > 0.0);
        rec.extra = Json{{"C", hc.C}, {"theta", hc.theta}};
        rep.add(std::move(rec));
    }

    std::vector<double> lner, uppr;
    double lo_min = std::numeric_limits<double>::infinity(), lo_max = 0.0;
    for (const double r : cfg.mvf.r_list) {
        const LowerBoundReport lb = kernel_lower_bound(r, p, model, window, cfg.seed);
        const UpperBoundReport ub = kernel_upper_bound(r, p, model, 4, window, cfg.seed);
        lner.push_back(std::log(lb.min_weight));
        uppr.push_back(std::log(ub.max_weight_ratio));
        lo_min = std::min(lo_min, lb.min_ratio);
        lo_max = std::max(lo_max, lb.min_ratio);
    }
    {
        const double spread = lo_max / lo_min;
        CheckRecord rec = make_record("lower-bound r-uniformity", kAnchorLowerBound,
                                      spread, 10.0, spread <= 10.0);
        rec.extra = Json{{"min_ratio", lo_min}, {"max_ratio", lo_max}};
        rep.add(std::move(rec));
    }
    if (cfg.mvf.r_list.size() >= 2) {
        // scaling exponent of the lower-bound extreme vs r
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const int n = static_cast<int>(cfg.mvf.r_list.size());
        for (int i = 0; i < n; ++i) {
            const double lx = std::log(cfg.mvf.r_list[i]);
            sx += lx;
            sy += lner[i];
            sxx += lx * lx;
            sxy += lx * lner[i];
        }
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        const double target = (p - 2.0) / (p + cfg.n_dim);
        CheckRecord rec = make_record("kernel scaling exponent", kAnchorUpperBound,
                                      std::abs(slope - target), 0.05,
                                      std::abs(slope - target) <= 0.05);
        rec.extra = Json{{"slope", slope}, {"target", target}};
        rep.add(std::move(rec));
    }

    // corpus sweep
    std::vector<std::pair<FamilyKind, double>> corpus = {
        {FamilyKind::Constants, -30.0},
        {FamilyKind::FundamentalMixtures, -30.0},
    };
    if (!drift_kernel_basis(model).empty()) corpus.push_back({FamilyKind::Exponential, -30.0});
    for (const auto& [kind, tau0] : corpus) {
        const HarmonicFamily family = test_family(model, kind, tau0, cfg.seed);
        int idx = 0;
        for (const auto& member : family.members) {
            if (!member.nonnegative) continue;
            const GroupPoint z0 = group_identity(cfg.n_dim);
            const HarnackReport hr = harnack_verify(member.field, true, z0, model, hc.C,
                                                    4000, cfg.seed + idx, 50.0, true, p);
            CheckRecord rec = make_record(family.label + " #" + std::to_string(idx),
                                          kAnchorHarnack, hr.sup_ratio, hc.C, hr.pass);
            rec.extra = Json{{"restricted", hr.restricted},
                             {"degenerate", hr.degenerate},
                             {"depth_used", hr.depth_used}};
            rep.add(std::move(rec));
            ++idx;
        }
    }
    rep.elapsed_seconds = timer.seconds();
    return SuiteOutput{std::move(rep), ""};
}

SuiteOutput cmd_liouville(const RunConfig& cfg) {
    require_antisymmetric_suite(cfg);
    Timer timer;
    Report rep = make_report(cfg);
    const DriftModel model = cfg.model();

    std::vector<LiouvilleInput> inputs;
    const auto basis = drift_kernel_basis(model);
    if (!basis.empty()) inputs.push_back(liouville_exponential(model, basis.front()));
    inputs.push_back(liouville_constant(3.0, cfg.n_dim));

    Rng rng = Rng::stream(cfg.seed, 0x11f);
    std::vector<Vector> xs;
    for (int i = 0; i < 5; ++i) xs.push_back(3.0 * rng.in_ball(cfg.n_dim));
    std::vector<double> t_grid;
    for (int k = 0; k <= 9; ++k) t_grid.push_back(-std::ldexp(1.0, k)); // -1 .. -512

    std::ostringstream csv;
    for (int d = 0; d < cfg.n_dim; ++d) csv << "x" << (d + 1) << ",";
    csv << "t,u,gap\n";

    for (const auto& input : inputs) {
        const LiouvilleTable table = liouville_limit_demo(input, xs, t_grid, 1e-6);
        CheckRecord rec = make_record(input.label, kAnchorLiouville,
                                      table.converged ? 0.0 : 1.0, 0.5, table.converged);
        rec.extra = Json{{"epsilon", table.epsilon}};
        rep.add(std::move(rec));
        for (const auto& row : table.rows) {
            const Vector& x = table.points[row.x_index];
            for (int d = 0; d < cfg.n_dim; ++d) csv << fmt17(x[d]) << ",";
            csv << fmt17(row.t) << "," << fmt17(row.value) << "," << fmt17(row.gap)
                << "\n";
        }
    }
    rep.elapsed_seconds = timer.seconds();
    return SuiteOutput{std::move(rep), csv.str()};
}

SuiteOutput cmd_recurrence(const RunConfig& cfg) {
    Timer timer;
    Report rep = make_report(cfg);
    const OUModel model(cfg.model());
    const RecurrenceVerdict verdict = classify_recurrence(model);

    {
        CheckRecord rec = make_record("kalman", kAnchorKalman,
                                      verdict.kalman_ok ? 1.0 : 0.0, 1.0, verdict.kalman_ok);
        rep.add(std::move(rec));
    }
    {
        const char* name = verdict.verdict == RecurrenceClass::Recurrent ? "recurrent"
                           : verdict.verdict == RecurrenceClass::Transient ? "transient"
                                                                           : "unknown";
        CheckRecord rec = make_record("verdict", kAnchorIntegral,
                                      verdict.verdict == RecurrenceClass::Unknown ? 0.0 : 1.0,
                                      1.0, verdict.verdict != RecurrenceClass::Unknown);
        rec.extra = Json{{"verdict", name},
                         {"hr", verdict.hr},
                         {"hr_borderline", verdict.hr_borderline},
                         {"integral",
                          verdict.integral == IntegralTestResult::Divergent    ? "divergent"
                          : verdict.integral == IntegralTestResult::Convergent ? "convergent"
                                                                               : "inconclusive"},
                         {"poly_exponent", verdict.evidence.poly_exponent},
                         {"exp_rate", verdict.evidence.exp_rate},
                         {"poly_wins", verdict.evidence.poly_wins},
                         {"grid_points", verdict.evidence.n_points},
                         {"t_max_used", verdict.evidence.t_max_used}};
        rep.add(std::move(rec));
    }
    {
        CheckRecord rec = make_record("hr", kAnchorHr, verdict.hr ? 1.0 : 0.0, 1.0, true);
        rec.extra = Json{{"borderline", verdict.hr_borderline}};
        rep.add(std::move(rec));
    }
    rep.elapsed_seconds = timer.seconds();
    return SuiteOutput{std::move(rep), ""};
}

SuiteOutput cmd_simulate(const RunConfig& cfg) {
    Timer timer;
    Report rep = make_report(cfg);
    const OUModel model(cfg.model());
    const int n = cfg.n_dim;
    Vector x0 = Vector::Zero(n);
    x0[0] = 2.0;

    // sampler law at two marginals: one exact transition per path
    for (const double t : {0.5, 2.0}) {
        const std::int64_t m = std::min<std::int64_t>(cfg.mc.n_paths, 20000);
        const Matrix qt = gramian(model, t);
        const Vector target = expm(Matrix(t * model.B())) * x0;
        Matrix sum = Matrix::Zero(n, 1);
        Matrix sum2 = Matrix::Zero(n, n);
        std::vector<double> grid{t};
        for (std::int64_t i = 0; i < m; ++i) {
            const Path path = sample_path(model, x0, grid, cfg.seed, i);
            const Vector xi = path.states.row(0).transpose();
            sum += xi;
            sum2 += xi * xi.transpose();
        }
        const Vector mean = sum / static_cast<double>(m);
        const Matrix cov =
            (sum2 - static_cast<double>(m) * mean * mean.transpose()) / (m - 1.0);
        double worst_mean = 0.0;
        for (int i = 0; i < n; ++i) {
            const double se = std::sqrt(qt(i, i) / static_cast<double>(m));
            worst_mean = std::max(worst_mean, std::abs(mean[i] - target[i]) / se);
        }
        double worst_cov = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double se = std::sqrt(
                    (qt(i, i) * qt(j, j) + qt(i, j) * qt(i, j)) / static_cast<double>(m));
                worst_cov = std::max(worst_cov, std::abs(cov(i, j) - qt(i, j)) / se);
            }
        CheckRecord rec = make_record("sampler law t=" + fmt17(t), kAnchorSampler,
                                      std::max(worst_mean, worst_cov), 4.0,
                                      std::max(worst_mean, worst_cov) <= 4.0);
        rec.extra = Json{{"mean_z", worst_mean}, {"cov_z", worst_cov}, {"paths", m}};
        rep.add(std::move(rec));
    }

    BallRegion ball{Vector::Zero(n), 1.0};
    {
        const HittingEstimate hit = hitting_probability(model, x0, ball, cfg.mc.horizon,
                                                        cfg.mc.n_paths, cfg.mc.step,
                                                        cfg.seed);
        CheckRecord rec = make_record("hitting probability", kAnchorHitting, hit.p_hat,
                                      1.0, true);
        rec.extra = Json{{"ci_lo", hit.ci_lo},
                         {"ci_hi", hit.ci_hi},
                         {"hits", hit.hits},
                         {"bias", "discrete monitoring underestimates hitting"}};
        rep.add(std::move(rec));
    }
    {
        const std::int64_t m = std::min<std::int64_t>(cfg.mc.n_paths, 4000);
        const OccupationEstimate occ = occupation_time(
            model, x0, ball, std::min(cfg.mc.horizon, 50.0), m, cfg.mc.step, cfg.seed + 1);
        const double tol = occ.mc_ci_halfwidth + 0.02 * std::abs(occ.quadrature_value);
        const double dev = std::abs(occ.mc_mean - occ.quadrature_value);
        CheckRecord rec = make_record("occupation time", kAnchorOccupation, dev, tol,
                                      dev <= tol);
        rec.extra = Json{{"mc", occ.mc_mean},
                         {"quadrature", occ.quadrature_value},
                         {"ci", occ.mc_ci_halfwidth}};
        rep.add(std::move(rec));
    }
    {
        // rotation-invariant configs admit the radial excessivity check
        const Matrix sym = 0.5 * (model.B() + model.B().transpose());
        const bool radial =
            (sym - (sym.trace() / n) * Matrix::Identity(n, n)).cwiseAbs().maxCoeff() <=
                1e-12 &&
            (model.Q() - model.Q()(0, 0) * Matrix::Identity(n, n)).cwiseAbs().maxCoeff() <=
                1e-12;
        if (radial) {
            std::vector<Vector> grid;
            for (const double rad : {1.5, 2.0, 3.0}) {
                Vector v = Vector::Zero(n);
                v[0] = rad;
                grid.push_back(v);
            }
            const std::int64_t m = std::min<std::int64_t>(cfg.mc.n_paths, 2000);
            const ExcessivityReport ex =
                excessivity_check(model, ball, grid, {0.1, 0.5, 2.0},
                                  std::min(cfg.mc.horizon, 50.0), m, cfg.mc.step,
                                  cfg.seed + 2);
            CheckRecord rec = make_record("excessivity", kAnchorExcessive,
                                          ex.excessive_ok && ex.monotone_ok ? 1.0 : 0.0,
                                          1.0, ex.excessive_ok && ex.monotone_ok);
            rec.extra = Json{{"sigma_budget", ex.sigma_budget}};
            rep.add(std::move(rec));
        }
    }

    // path dump
    std::ostringstream csv;
    csv << "t";
    for (int d = 0; d < n; ++d) csv << ",x" << (d + 1);
    csv << "\n";
    const int rows = 512;
    std::vector<double> grid;
    for (int k = 1; k <= rows; ++k) grid.push_back(cfg.mc.horizon * k / rows);
    const Path path = sample_path(model, x0, grid, cfg.seed, 0);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        csv << fmt17(grid[k]);
        for (int d = 0; d < n; ++d) csv << "," << fmt17(path.states(static_cast<int>(k), d));
        csv << "\n";
    }
    rep.elapsed_seconds = timer.seconds();
    return SuiteOutput{std::move(rep), csv.str()};
}

SuiteOutput run_suite(const RunConfig& cfg) {
    if (cfg.suite == "mvf_check") return cmd_mvf_check(cfg);
    if (cfg.suite == "onion_theta") return cmd_onion_theta(cfg);
    if (cfg.suite == "harnack") return cmd_harnack(cfg);
    if (cfg.suite == "liouville") return cmd_liouville(cfg);
    if (cfg.suite == "recurrence") return cmd_recurrence(cfg);
    if (cfg.suite == "simulate") return cmd_simulate(cfg);
    throw ConfigError("suite: unknown suite '" + cfg.suite +
                      "' (expected mvf_check|onion_theta|harnack|liouville|recurrence|simulate)");
}

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"verification suites for OU/Kolmogorov operators with antisymmetric drift"};
    std::string config_path, suite_override, out_override, csv_override;
    std::uint64_t seed_override = 0;
    bool seed_given = false;
    app.add_option("--config", config_path, "JSON run configuration")->required();
    app.add_option("--suite", suite_override, "suite to run (overrides config)");
    auto* seed_opt = app.add_option("--seed", seed_override, "seed (overrides config)");
    app.add_option("--out", out_override, "report path (overrides config)");
    app.add_option("--csv", csv_override, "CSV side-file path (overrides config)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    seed_given = seed_opt->count() > 0;

    try {
        RunConfig cfg = load_config_file(config_path);
        if (!suite_override.empty()) cfg.suite = suite_override;
        if (seed_given) {
            cfg.seed = seed_override;
            cfg.quadrature.seed = seed_override;
        }
        if (!out_override.empty()) cfg.out_path = out_override;
        if (!csv_override.empty()) cfg.csv_path = csv_override;
        if (cfg.suite.empty())
            throw ConfigError("suite: missing (set in config or pass --suite)");
        cfg.echo["suite"] = cfg.suite;
        cfg.echo["seed"] = cfg.seed;

        const SuiteOutput out = run_suite(cfg);
        const Json j = to_json(out.report, true);
        if (cfg.out_path.empty()) {
            std::cout << j.dump(2) << "\n";
        } else {
            std::ofstream f(cfg.out_path);
            if (!f) throw ConfigError("out: cannot open '" + cfg.out_path + "'");
            f << j.dump(2) << "\n";
        }
        if (!cfg.csv_path.empty() && !out.csv.empty()) {
            std::ofstream f(cfg.csv_path);
            if (!f) throw ConfigError("csv: cannot open '" + cfg.csv_path + "'");
            f << out.csv;
        }
        return out.report.overall_pass() ? 0 : 1;
    } catch (const ConfigError& e) {
        Json err{{"error", "config"}, {"detail", e.what()}};
        std::cerr << err.dump() << "\n";
        return 2;
    } catch (const std::exception& e) {
        Json err{{"error", "internal"}, {"detail", e.what()}};
        std::cerr << err.dump() << "\n";
        return 3;
    }
}

} // namespace oukl
