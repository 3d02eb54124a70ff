#include "oukl/onion_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "oukl/errors.hpp"
#include "oukl/parallel.hpp"
#include "oukl/rng.hpp"

namespace oukl {
namespace {

constexpr double kPi = std::numbers::pi;

std::vector<Vector> boundary_directions(int n_dim, int n_dirs) {
    std::vector<Vector> dirs;
    dirs.reserve(n_dirs);
    if (n_dim == 1) {
        Vector plus(1), minus(1);
        plus << 1.0;
        minus << -1.0;
        dirs = {plus, minus};
    } else if (n_dim == 2) {
        for (int i = 0; i < n_dirs; ++i) {
            const double th = 2.0 * kPi * i / n_dirs;
            Vector d(2);
            d << std::cos(th), std::sin(th);
            dirs.push_back(d);
        }
    } else if (n_dim == 3) {
        // Fibonacci spiral: deterministic, near-uniform sphere covering.
        const double golden = kPi * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < n_dirs; ++i) {
            const double z = 1.0 - 2.0 * (i + 0.5) / n_dirs;
            const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double th = golden * i;
            Vector d(3);
            d << rad * std::cos(th), rad * std::sin(th), z;
            dirs.push_back(d);
        }
    } else {
        throw InvalidInput("boundary sampling supports N <= 3");
    }
    return dirs;
}

// log(1/phi_p(0, zeta)) for zeta = (xi, tau), tau < 0.
double log_inv_phi_origin(const Vector& xi, double tau, int n_dim, int p) {
    const double a = -tau;
    return 0.5 * (n_dim + p) * std::log(4.0 * kPi * a) + xi.squaredNorm() / (4.0 * a);
}

} // namespace

ThetaConstants theta_proof_constants(int n_dim, int p) {
    if (p < 1) throw InvalidInput("theta_proof_constants: p must be >= 1");
    if (n_dim < 1) throw InvalidInput("theta_proof_constants: N must be >= 1");
    ThetaConstants c;
    c.c0 = 2.0 / std::numbers::e + 8.0 * kPi / (n_dim + p);
    c.c1 = (1.0 + 4.0 * kPi) * std::log(1.0 / (1.0 + 4.0 * kPi));
    c.c2 = 8.0 * kPi / (n_dim + p);
    return c;
}

double analytic_theta(int n_dim, int p) {
    const ThetaConstants c = theta_proof_constants(n_dim, p);
    return std::exp((c.c0 - c.c1) / c.c2) * 1.01;
}

std::vector<GroupPoint> sigma_sample(double r, const DriftModel& model, int p,
                                     int k, std::uint64_t seed) {
    if (!(r > 0.0)) throw InvalidInput("sigma_sample: r must be positive");
    if (k < 1) throw InvalidInput("sigma_sample: k must be >= 1");
    const int n = model.dim();
    const double t = -std::pow(r, 2.0 / (n + p));
    const double x_max = 2.0 * std::pow(r, 1.0 / (n + p));

    std::vector<GroupPoint> pts;
    pts.reserve(k);
    pts.push_back(GroupPoint{Vector::Zero(n), t});
    if (k >= 2) {
        Vector extreme = Vector::Zero(n);
        extreme[0] = x_max * (1.0 - 1e-9);
        pts.push_back(GroupPoint{extreme, t});
    }
    Rng rng = Rng::stream(seed, 0);
    while (static_cast<int>(pts.size()) < k) {
        pts.push_back(GroupPoint{x_max * rng.in_ball(n), t});
    }
    return pts;
}

double empirical_theta(double r, const GroupPoint& z, const DriftModel& model,
                       int p, double rel_tol, BoundaryResolution res, double hi_factor) {
    const int n = model.dim();
    if (z.x.size() != n) throw InvalidInput("empirical_theta: dimension mismatch");
    const double t_sigma = -std::pow(r, 2.0 / (n + p));
    if (std::abs(z.t - t_sigma) > 1e-9 * (1.0 + std::abs(t_sigma)) ||
        z.x.squaredNorm() >= -4.0 * z.t)
        throw InvalidInput("empirical_theta: z must lie in Sigma_r");

    const OnionSpec spec(z, r, p, model);
    const double dmax = spec.delta_max();
    const auto dirs = boundary_directions(n, res.n_dirs);

    // Boundary samples of Omega_r(z) do not depend on theta; the bisection
    // predicate only re-reads phi_p(0, .) on them.
    std::vector<double> log_inv_phi;
    log_inv_phi.reserve(static_cast<std::size_t>(res.n_depths) * dirs.size());
    for (int j = 0; j < res.n_depths; ++j) {
        const double delta = dmax * (j + 0.5) / res.n_depths;
        const auto slice = onion_slice(spec, delta);
        if (!slice) continue;
        const double tau = z.t - delta;
        const double shrink = slice->radius * (1.0 - 1e-9);
        for (const auto& d : dirs) {
            const Vector xi = slice->center + shrink * d;
            log_inv_phi.push_back(log_inv_phi_origin(xi, tau, n, p));
        }
    }
    if (log_inv_phi.empty()) throw InvalidInput("empirical_theta: degenerate onion");

    const double log_r = std::log(r);
    // zeta in Omega_{theta r}(0)  <=>  log theta + log r > log(1/phi_p(0,zeta))
    const auto all_inside = [&](double theta) {
        const double budget = std::log(theta) + log_r;
        for (const double g : log_inv_phi)
            if (!(budget > g)) return false;
        return true;
    };

    const double theta_ref = analytic_theta(n, p);
    double hi = theta_ref * hi_factor;
    if (!all_inside(hi))
        throw LemmaViolation("two-onion inclusion failed at theta_analytic * " +
                             std::to_string(hi_factor));
    double lo = 1.0;
    if (all_inside(lo)) return 1.0;
    while ((hi - lo) / lo > rel_tol) {
        const double mid = std::sqrt(lo * hi); // log-space bisection
        if (all_inside(mid))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

std::vector<ThetaReport> two_onion_sweep(const std::vector<double>& r_grid,
                                         const DriftModel& model, int p, int k,
                                         std::uint64_t seed, BoundaryResolution res) {
    if (r_grid.empty()) throw InvalidInput("two_onion_sweep: empty r grid");
    for (const double r : r_grid)
        if (!(r > 0.0)) throw InvalidInput("two_onion_sweep: r values must be positive");

    const double theta_ref = analytic_theta(model.dim(), p);
    std::vector<std::vector<GroupPoint>> samples(r_grid.size());
    for (std::size_t i = 0; i < r_grid.size(); ++i) {
        std::uint64_t state = seed;
        const std::uint64_t r_seed = splitmix64(state) ^ (i + 1);
        samples[i] = sigma_sample(r_grid[i], model, p, k, r_seed);
    }

    std::vector<ThetaReport> reports(r_grid.size() * static_cast<std::size_t>(k));
    parallel_for(static_cast<std::int64_t>(reports.size()), [&](std::int64_t idx) {
        const std::size_t ir = static_cast<std::size_t>(idx) / k;
        const std::size_t iz = static_cast<std::size_t>(idx) % k;
        ThetaReport rep;
        rep.r = r_grid[ir];
        rep.z = samples[ir][iz];
        rep.theta_analytic = theta_ref;
        rep.theta_empirical = empirical_theta(rep.r, rep.z, model, p, 1e-3, res);
        rep.inclusion_verified = rep.theta_empirical <= rep.theta_analytic;
        rep.samples = res.n_dirs * res.n_depths;
        reports[idx] = rep;
    });
    return reports;
}

} // namespace oukl
