#include "oukl/harnack.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/SVD>

#include "oukl/errors.hpp"
#include "oukl/matexp.hpp"
#include "oukl/parallel.hpp"
#include "oukl/rng.hpp"

namespace oukl {
namespace {

constexpr double kPi = std::numbers::pi;

double scaling_exponent(int n_dim, int p) {
    return (p - 2.0) / (p + n_dim);
}

// Local onion coordinates: a sampled point of Omega_r^(p)(z) written as
// z o (rho d, -delta) has kernel arguments depending only on (delta, rho).
struct LocalSample {
    double delta;
    double rho;
    double q; // R(delta)^2 - rho^2
};

// Draws interior samples of the normalized onion; the window keeps the
// extreme statistics away from the boundary zeros.
std::vector<LocalSample> sample_local(const OnionSpec& spec, KernelSampleWindow window,
                                      std::uint64_t seed) {
    const double dmax = spec.delta_max();
    const int n = spec.dim();
    const double log_r = std::log(spec.r());
    const double half_np = 0.5 * (n + spec.p());
    std::vector<LocalSample> out;
    out.reserve(window.n_samples);
    for (int i = 0; i < window.n_samples; ++i) {
        Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
        const double dfrac = window.margin + (1.0 - 2.0 * window.margin) * rng.uniform01();
        const double delta = dmax * dfrac;
        const double lg = log_r - half_np * std::log(4.0 * kPi * delta);
        if (lg <= 0.0) continue;
        const double radius2 = 4.0 * delta * lg;
        const double f = (1.0 - window.margin) * std::pow(rng.uniform01(), 1.0 / n);
        LocalSample s;
        s.delta = delta;
        s.rho = std::sqrt(radius2) * f;
        s.q = radius2 * (1.0 - f * f);
        out.push_back(s);
    }
    return out;
}

double require_positive_p(int p) {
    if (p <= 4) throw InvalidInput("kernel bounds require p > 4");
    return 0.0;
}

} // namespace

std::vector<Vector> drift_kernel_basis(const DriftModel& model) {
    Eigen::JacobiSVD<Matrix> svd(model.B(), Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double tol = model.dim() * 1e-12 * std::max(1.0, sv.size() ? sv[0] : 0.0);
    std::vector<Vector> basis;
    for (int i = 0; i < sv.size(); ++i)
        if (sv[i] <= tol) basis.push_back(svd.matrixV().col(i));
    if (model.B().cwiseAbs().maxCoeff() == 0.0) {
        basis.clear();
        for (int i = 0; i < model.dim(); ++i) basis.push_back(Vector::Unit(model.dim(), i));
    }
    return basis;
}

HarmonicFamily test_family(const DriftModel& model, FamilyKind kind,
                           double tau0, std::uint64_t seed) {
    if (!model.antisymmetric())
        throw InvalidInput("test_family: requires antisymmetric B");
    const int n = model.dim();
    HarmonicFamily family;
    switch (kind) {
        case FamilyKind::Constants: {
            family.label = "constants";
            for (const double c : {1.0, 2.5, 17.0}) {
                SolutionField f;
                f.eval = [c](const Vector&, double) { return c; };
                f.label = "constant " + std::to_string(c);
                f.harmonic = true;
                family.members.push_back(FamilyMember{f, true, true});
            }
            break;
        }
        case FamilyKind::QuadraticHeat: {
            family.label = "quadratic";
            for (const double shift : {0.0, 5.0}) {
                SolutionField f;
                f.eval = [n, shift](const Vector& x, double t) {
                    return x.squaredNorm() + 2.0 * n * t + shift;
                };
                f.label = "|x|^2 + 2Nt + " + std::to_string(shift);
                f.harmonic = true;
                family.members.push_back(FamilyMember{f, false, true});
            }
            break;
        }
        case FamilyKind::Exponential: {
            family.label = "exponential";
            const auto basis = drift_kernel_basis(model);
            if (basis.empty())
                throw InvalidInput("test_family: exponential family needs ker B != {0}");
            std::vector<Vector> bs = basis;
            if (basis.size() >= 2) {
                Vector mix = (basis[0] + basis[1]).normalized();
                bs.push_back(mix);
            }
            for (const auto& b : bs) {
                SolutionField f;
                const double b2 = b.squaredNorm();
                f.eval = [b, b2](const Vector& x, double t) {
                    return std::exp(b.dot(x) + b2 * t);
                };
                f.label = "exp(<b,x> + |b|^2 t)";
                f.harmonic = true;
                family.members.push_back(FamilyMember{f, true, true});
            }
            break;
        }
        case FamilyKind::FundamentalMixtures: {
            family.label = "fundamental mixtures";
            Rng rng = Rng::stream(seed, 0);
            std::vector<Vector> poles;
            std::vector<double> weights;
            poles.push_back(Vector::Zero(n));
            weights.push_back(1.0);
            const Matrix b_mat = model.B();
            auto make_member = [&](std::vector<Vector> xs, std::vector<double> ws) {
                SolutionField f;
                f.domain_floor = tau0;
                f.harmonic = true;
                f.label = xs.size() == 1 ? "Gamma(., pole)" : "Gamma mixture";
                const int dim = n;
                f.eval = [b_mat, xs, ws, tau0, dim](const Vector& x, double t) {
                    const double dt = t - tau0;
                    if (dt <= 0.0) return 0.0;
                    const Matrix e = expm(Matrix(-dt * b_mat));
                    double sum = 0.0;
                    const double pref = std::pow(4.0 * kPi * dt, -0.5 * dim);
                    for (std::size_t k = 0; k < xs.size(); ++k) {
                        const double d2 = (x - e * xs[k]).squaredNorm();
                        sum += ws[k] * pref * std::exp(-d2 / (4.0 * dt));
                    }
                    return sum;
                };
                family.members.push_back(FamilyMember{f, true, false});
            };
            make_member(poles, weights);
            std::vector<Vector> mix_poles;
            std::vector<double> mix_w;
            for (int k = 0; k < 3; ++k) {
                mix_poles.push_back(2.0 * rng.in_ball(n));
                mix_w.push_back(0.25 + rng.uniform01());
            }
            make_member(mix_poles, mix_w);
            break;
        }
    }
    return family;
}

LowerBoundReport kernel_lower_bound(double r, int p, const DriftModel& model,
                                    KernelSampleWindow window, std::uint64_t seed) {
    require_positive_p(p);
    const OnionSpec spec(group_identity(model.dim()), r, p, model);
    const double theta = analytic_theta(model.dim(), p);
    const auto samples = sample_local(spec, window, seed);
    if (samples.empty()) throw DomainError("kernel_lower_bound: no interior samples");

    double min_weight = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) {
        // zeta = (rho d, -delta) lies in Omega_r(0) subset Omega_{2 theta r}(0).
        GroupPoint zeta{Vector::Zero(model.dim()), -s.delta};
        zeta.x[0] = s.rho; // weight depends on |x| only
        const double w = weight_kernel(zeta, 2.0 * theta * r, p, model);
        min_weight = std::min(min_weight, w);
    }
    LowerBoundReport rep;
    rep.r = r;
    rep.theta = theta;
    rep.min_weight = min_weight;
    rep.min_ratio = min_weight / std::pow(r, scaling_exponent(model.dim(), p));
    rep.n_samples = static_cast<int>(samples.size());
    return rep;
}

UpperBoundReport kernel_upper_bound(double r, int p, const DriftModel& model,
                                    int n_centers, KernelSampleWindow window,
                                    std::uint64_t seed) {
    require_positive_p(p);
    const int n = model.dim();
    const OnionSpec spec(group_identity(n), r, p, model);
    const auto samples = sample_local(spec, window, seed);
    if (samples.empty()) throw DomainError("kernel_upper_bound: no interior samples");
    const auto centers = sigma_sample(r, model, p, std::max(1, n_centers), seed ^ 0x5bd1e995ULL);
    const double scale = std::pow(r, scaling_exponent(n, p));
    const double cp2 = p / (4.0 * (p + 2.0));

    UpperBoundReport rep;
    rep.r = r;
    rep.n_centers = static_cast<int>(centers.size());
    rep.n_samples = static_cast<int>(samples.size());
    // In the local coordinates w = z^{-1} o zeta = (rho d, -delta) both
    // kernels depend on (delta, rho) only, so the extremes are the same for
    // every center z in Sigma_r; the unit tests cross-check this against the
    // absolute-coordinate route.
    for (const auto& s : samples) {
        const double k1 = std::pow(s.q, 0.5 * p) * 0.25 * s.rho * s.rho / (s.delta * s.delta);
        const double k2 = std::pow(s.q, 0.5 * (p + 2)) / (s.delta * s.delta);
        const double w = unit_ball_volume(p) * (k1 + cp2 * k2);
        rep.max_k1_ratio = std::max(rep.max_k1_ratio, k1 / scale);
        rep.max_k2_ratio = std::max(rep.max_k2_ratio, k2 / scale);
        rep.max_weight_ratio = std::max(rep.max_weight_ratio, w / scale);
    }
    return rep;
}

RatioBoundReport ratio_bound(double r, int p, const DriftModel& model,
                             int n_centers, KernelSampleWindow window,
                             std::uint64_t seed) {
    require_positive_p(p);
    const int n = model.dim();
    const double theta = analytic_theta(n, p);
    const auto centers = sigma_sample(r, model, p, std::max(1, n_centers), seed ^ 0x2545f491ULL);
    const OnionSpec local(group_identity(n), r, p, model);
    const auto samples = sample_local(local, window, seed);
    if (samples.empty()) throw DomainError("ratio_bound: no interior samples");
    const double cp2 = p / (4.0 * (p + 2.0));

    double min_ratio = std::numeric_limits<double>::infinity();
    std::vector<double> mins(centers.size(), std::numeric_limits<double>::infinity());
    parallel_for(static_cast<std::int64_t>(centers.size()), [&](std::int64_t ci) {
        const GroupPoint& z = centers[ci];
        Rng dir_rng = Rng::stream(seed ^ 0x94d049bbULL, static_cast<std::uint64_t>(ci));
        double local_min = std::numeric_limits<double>::infinity();
        for (const auto& s : samples) {
            const Vector d = dir_rng.on_sphere(n);
            // absolute coordinates of zeta = z o (rho d, -delta)
            const Matrix e = propagator(model, -s.delta).E;
            GroupPoint zeta{s.rho * d + e * z.x, z.t - s.delta};
            const double numer = weight_kernel(zeta, 2.0 * theta * r, p, model);
            // denominator in local coordinates
            const double k1 = std::pow(s.q, 0.5 * p) * 0.25 * s.rho * s.rho / (s.delta * s.delta);
            const double k2 = std::pow(s.q, 0.5 * (p + 2)) / (s.delta * s.delta);
            const double denom = unit_ball_volume(p) * (k1 + cp2 * k2);
            if (denom <= 0.0) continue; // rho = 0 on the axis with q = 0: boundary-like
            local_min = std::min(local_min, numer / denom);
        }
        mins[ci] = local_min;
    });
    for (const double m : mins) min_ratio = std::min(min_ratio, m);

    RatioBoundReport rep;
    rep.r = r;
    rep.theta = theta;
    rep.min_ratio = min_ratio;
    rep.n_centers = static_cast<int>(centers.size());
    rep.n_samples = static_cast<int>(samples.size());
    return rep;
}

HarnackConstant assemble_harnack_constant(int p, const DriftModel& model,
                                          const std::vector<double>& r_sweep,
                                          int n_centers, KernelSampleWindow window,
                                          std::uint64_t seed) {
    if (r_sweep.empty()) throw InvalidInput("assemble_harnack_constant: empty sweep");
    HarnackConstant hc;
    hc.theta = analytic_theta(model.dim(), p);
    hc.r_sweep = r_sweep;
    hc.min_ratio = std::numeric_limits<double>::infinity();
    for (const double r : r_sweep) {
        const auto rb = ratio_bound(r, p, model, n_centers, window, seed);
        hc.min_ratio = std::min(hc.min_ratio, rb.min_ratio);
    }
    hc.C = 2.0 * hc.theta / hc.min_ratio;
    return hc;
}

namespace {

struct ParaboloidPoint {
    Vector y;     // local spatial offset, |y| < 2 sqrt(depth)
    double depth; // t0 - t > 0
};

GroupPoint to_absolute(const ParaboloidPoint& q, const GroupPoint& z0,
                       const DriftModel& model) {
    const Matrix e = propagator(model, -q.depth).E;
    return GroupPoint{q.y + e * z0.x, z0.t - q.depth};
}

} // namespace

HarnackReport harnack_verify(const SolutionField& u, bool nonnegative,
                             const GroupPoint& z0, const DriftModel& model,
                             double constant, int n_samples, std::uint64_t seed,
                             double depth, bool refine, int p) {
    if (!nonnegative)
        throw InvalidInput("harnack_verify: the inequality is for nonnegative solutions");
    const int n = model.dim();
    HarnackReport rep;
    rep.z0 = z0;
    rep.family_label = u.label;
    rep.constant = constant;

    double max_depth = depth;
    if (std::isfinite(u.domain_floor)) {
        // A point at depth d needs the onion Omega_{2 theta r}(z0) with
        // r = d^{(N+p)/2}, whose time depth is d (2 theta)^{2/(N+p)}/(4 pi).
        // Keeping that inside t > domain_floor caps the admissible depth.
        // Restricted evidence, not a theorem instance.
        const double theta = analytic_theta(n, p);
        const double chain_factor =
            std::pow(2.0 * theta, 2.0 / (n + p)) / (4.0 * kPi);
        const double admissible =
            (z0.t - u.domain_floor) / std::max(chain_factor, 1.0) * (1.0 - 1e-9);
        max_depth = std::min(max_depth, admissible);
        rep.restricted = true;
        if (!(max_depth > 0.0))
            throw DomainError("harnack_verify: z0 not inside the field's domain");
    }
    rep.depth_used = max_depth;

    const double u0 = u(z0.x, z0.t);
    if (u0 == 0.0) {
        rep.degenerate = true;
        Rng rng = Rng::stream(seed, 0);
        double max_abs = 0.0;
        for (int i = 0; i < 256; ++i) {
            const double d = max_depth * std::pow(rng.uniform01(), 2.0 / (n + 2));
            const Vector y = 2.0 * std::sqrt(d) * rng.in_ball(n);
            const GroupPoint z = to_absolute(ParaboloidPoint{y, d}, z0, model);
            max_abs = std::max(max_abs, std::abs(u(z.x, z.t)));
        }
        rep.sup_ratio = 0.0;
        rep.pass = max_abs <= 1e-12;
        return rep;
    }

    std::vector<double> ratios(n_samples, -std::numeric_limits<double>::infinity());
    std::vector<ParaboloidPoint> pts(n_samples);
    parallel_for(n_samples, [&](std::int64_t i) {
        Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
        // volume-weighted depth, then a radial profile biased toward the
        // lateral boundary where the sharp families peak
        const double d = max_depth * std::pow(rng.uniform01(), 2.0 / (n + 2));
        double frac = std::pow(rng.uniform01(), 1.0 / n);
        if ((i % 4) == 0) frac = 1.0 - 1e-6 * rng.uniform01(); // near-boundary stratum
        const Vector dir = rng.on_sphere(n);
        ParaboloidPoint q{2.0 * std::sqrt(d) * frac * (1.0 - 1e-12) * dir, d};
        const GroupPoint z = to_absolute(q, z0, model);
        ratios[i] = u(z.x, z.t) / u0;
        pts[i] = q;
    });

    double best = -std::numeric_limits<double>::infinity();
    ParaboloidPoint best_pt{Vector::Zero(n), max_depth / 2};
    for (int i = 0; i < n_samples; ++i) {
        if (ratios[i] > best) {
            best = ratios[i];
            best_pt = pts[i];
        }
    }

    if (refine) {
        // Compass search on (y, depth), projected into the open paraboloid.
        ParaboloidPoint cur = best_pt;
        double cur_val = best;
        double step = 0.25;
        const double shrink = 1.0 - 1e-12;
        for (int iter = 0; iter < 200 && step > 1e-14; ++iter) {
            bool improved = false;
            for (int axis = 0; axis <= n; ++axis) {
                for (const double sgn : {+1.0, -1.0}) {
                    ParaboloidPoint cand = cur;
                    if (axis < n)
                        cand.y[axis] += sgn * step * std::sqrt(cand.depth);
                    else
                        cand.depth = std::clamp(cand.depth * (1.0 + sgn * step),
                                                1e-12, max_depth);
                    const double rmax = 2.0 * std::sqrt(cand.depth) * shrink;
                    const double ylen = cand.y.norm();
                    if (ylen > rmax) cand.y *= rmax / ylen;
                    const GroupPoint z = to_absolute(cand, z0, model);
                    const double val = u(z.x, z.t) / u0;
                    if (val > cur_val) {
                        cur_val = val;
                        cur = cand;
                        improved = true;
                    }
                }
            }
            if (!improved) step *= 0.5;
        }
        best = cur_val;
    }

    rep.sup_ratio = best;
    rep.pass = best <= constant;
    return rep;
}

LiouvilleInput liouville_exponential(const DriftModel& model, const Vector& b) {
    if ((model.B() * b).norm() > 1e-12 * (1.0 + b.norm()))
        throw InvalidInput("liouville_exponential: b must lie in ker B");
    const double b2 = b.squaredNorm();
    if (b2 == 0.0) throw InvalidInput("liouville_exponential: b must be nonzero");
    LiouvilleInput in;
    in.u.eval = [b, b2](const Vector& x, double t) { return std::exp(b.dot(x) + b2 * t); };
    in.u.label = "exp(<b,x> + |b|^2 t)";
    in.u.harmonic = true;
    in.inf_value = 0.0;
    in.threshold_time = [b, b2](const Vector& x, double eps) {
        return -(b.dot(x) + std::log(1.0 / eps)) / b2;
    };
    in.label = in.u.label;
    return in;
}

LiouvilleInput liouville_constant(double c, int) {
    LiouvilleInput in;
    in.u.eval = [c](const Vector&, double) { return c; };
    in.u.label = "constant";
    in.u.harmonic = true;
    in.inf_value = c;
    in.threshold_time = [](const Vector&, double) {
        return std::numeric_limits<double>::infinity();
    };
    in.label = in.u.label;
    return in;
}

LiouvilleTable liouville_limit_demo(const LiouvilleInput& input,
                                    const std::vector<Vector>& xs,
                                    const std::vector<double>& t_grid,
                                    double epsilon) {
    if (xs.empty() || t_grid.empty())
        throw InvalidInput("liouville_limit_demo: empty inputs");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] < t_grid[i - 1]))
            throw InvalidInput("liouville_limit_demo: t grid must be descending");

    LiouvilleTable table;
    table.points = xs;
    table.epsilon = epsilon;
    table.converged = true;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double threshold = input.threshold_time(xs[i], epsilon);
        table.thresholds.push_back(threshold);
        bool any_below = false;
        for (const double t : t_grid) {
            const double v = input.u(xs[i], t);
            const double gap = v - input.inf_value;
            table.rows.push_back(LiouvilleTable::Row{static_cast<int>(i), t, v, gap});
            if (t < threshold) {
                any_below = true;
                if (!(gap <= epsilon * (1.0 + 1e-9))) table.converged = false;
            }
        }
        if (!any_below && std::isfinite(threshold)) table.converged = false;
    }
    return table;
}

} // namespace oukl
