#include "oukl/mvf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "oukl/errors.hpp"
#include "oukl/parallel.hpp"
#include "oukl/rng.hpp"

namespace oukl {
namespace {

constexpr double kPi = std::numbers::pi;

// Gauss-Legendre nodes and weights on [-1, 1], Newton on the recurrence.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double z1 = z;
            z = z1 - p0 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
}

// Unit directions with quadrature weights summing to the sphere measure.
struct AngularRule {
    std::vector<Vector> dirs;
    std::vector<double> weights;
};

AngularRule angular_rule(int n_dim, int n_per_slice) {
    AngularRule rule;
    if (n_dim == 1) {
        Vector plus(1), minus(1);
        plus << 1.0;
        minus << -1.0;
        rule.dirs = {plus, minus};
        rule.weights = {1.0, 1.0};
    } else if (n_dim == 2) {
        const int n_ang = std::max(4, 2 * n_per_slice);
        for (int k = 0; k < n_ang; ++k) {
            const double th = 2.0 * kPi * (k + 0.5) / n_ang;
            Vector d(2);
            d << std::cos(th), std::sin(th);
            rule.dirs.push_back(d);
            rule.weights.push_back(2.0 * kPi / n_ang);
        }
    } else if (n_dim == 3) {
        const int n_mu = std::max(4, n_per_slice);
        const int n_phi = std::max(8, 2 * n_per_slice);
        std::vector<double> mu, wmu;
        gauss_legendre(n_mu, mu, wmu);
        for (int a = 0; a < n_mu; ++a) {
            const double s = std::sqrt(std::max(0.0, 1.0 - mu[a] * mu[a]));
            for (int b = 0; b < n_phi; ++b) {
                const double ph = 2.0 * kPi * (b + 0.5) / n_phi;
                Vector d(3);
                d << s * std::cos(ph), s * std::sin(ph), mu[a];
                rule.dirs.push_back(d);
                rule.weights.push_back(wmu[a] * 2.0 * kPi / n_phi);
            }
        }
    } else {
        throw InvalidInput("tensor-grid quadrature supports N <= 3; use monte-carlo");
    }
    return rule;
}

struct KernelConstants {
    int n_dim;
    int p;
    double log_r;
    double half_np;  // (N+p)/2
    double omega;    // omega_p
    double cp2;      // p / (4 (p+2))
};

KernelConstants kernel_constants(const OnionSpec& spec) {
    return KernelConstants{spec.dim(), spec.p(), std::log(spec.r()),
                           0.5 * (spec.dim() + spec.p()),
                           unit_ball_volume(spec.p()),
                           spec.p() / (4.0 * (spec.p() + 2.0))};
}

// log( r / (4 pi delta)^{(N+p)/2} )
double slice_log_term(const KernelConstants& kc, double delta) {
    return kc.log_r - kc.half_np * std::log(4.0 * kPi * delta);
}

// W_r^(p) at local coordinates (rho, -delta) with q = R(delta)^2 - rho^2.
double kernel_value(const KernelConstants& kc, double delta, double rho2, double q) {
    const double d2 = delta * delta;
    return kc.omega * std::pow(q, 0.5 * kc.p) *
           (0.25 * rho2 / d2 + kc.cp2 * q / d2);
}

struct QuadOutcome {
    double integral = 0.0;   // already divided by r
    double variance = 0.0;   // MC only
    double max_abs_u = 0.0;
};

// Time slices at delta = delta_max * w^2 with midpoint w; the substitution
// absorbs the delta^{(p-2)/2} vanishing rate at the top of the onion.
QuadOutcome integrate_grid(const SolutionField& u, const OnionSpec& spec,
                           int n_slices, int n_rad) {
    const KernelConstants kc = kernel_constants(spec);
    const double dmax = spec.delta_max();
    const int n_dim = spec.dim();

    std::vector<double> psi, wpsi;
    gauss_legendre(n_rad, psi, wpsi);
    std::vector<double> sin_psi(n_rad), cos_psi(n_rad), wps(n_rad);
    for (int j = 0; j < n_rad; ++j) {
        const double a = (psi[j] + 1.0) * (kPi / 4.0);
        sin_psi[j] = std::sin(a);
        cos_psi[j] = std::cos(a);
        wps[j] = wpsi[j] * (kPi / 4.0);
    }
    const AngularRule ang = angular_rule(n_dim, n_rad);

    std::vector<double> partial(n_slices, 0.0), partial_max(n_slices, 0.0);
    parallel_for(n_slices, [&](std::int64_t i) {
        const double w = (static_cast<double>(i) + 0.5) / n_slices;
        const double delta = dmax * w * w;
        const double jac = 2.0 * dmax * w / n_slices;
        const double lg = slice_log_term(kc, delta);
        if (lg <= 0.0) return;
        const double radius2 = 4.0 * delta * lg;
        const double radius = std::sqrt(radius2);
        const Vector center = propagator(spec.model(), -delta).E * spec.center().x;
        const double t_slice = spec.center().t - delta;

        double slice_sum = 0.0;
        double local_max = 0.0;
        Vector xbuf(n_dim);
        for (int j = 0; j < n_rad; ++j) {
            const double rho = radius * sin_psi[j];
            const double q = radius2 * cos_psi[j] * cos_psi[j];
            const double kern = kernel_value(kc, delta, rho * rho, q);
            const double geom = std::pow(rho, n_dim - 1) * radius * cos_psi[j] * wps[j];
            double usum = 0.0;
            for (std::size_t d = 0; d < ang.dirs.size(); ++d) {
                xbuf = center + rho * ang.dirs[d];
                const double val = u(xbuf, t_slice);
                usum += ang.weights[d] * val;
                local_max = std::max(local_max, std::abs(val));
            }
            slice_sum += kern * geom * usum;
        }
        partial[i] = jac * slice_sum;
        partial_max[i] = local_max;
    });

    QuadOutcome out;
    for (int i = 0; i < n_slices; ++i) {
        out.integral += partial[i];
        out.max_abs_u = std::max(out.max_abs_u, partial_max[i]);
    }
    out.integral /= spec.r();
    return out;
}

QuadOutcome integrate_mc(const SolutionField& u, const OnionSpec& spec,
                         int n_slices, int n_per_slice, std::uint64_t seed) {
    const KernelConstants kc = kernel_constants(spec);
    const double dmax = spec.delta_max();
    const int n_dim = spec.dim();
    const double vol_unit = unit_ball_volume(n_dim);

    std::vector<double> partial(n_slices, 0.0), partial_var(n_slices, 0.0),
        partial_max(n_slices, 0.0);
    parallel_for(n_slices, [&](std::int64_t i) {
        const double w = (static_cast<double>(i) + 0.5) / n_slices;
        const double delta = dmax * w * w;
        const double jac = 2.0 * dmax * w / n_slices;
        const double lg = slice_log_term(kc, delta);
        if (lg <= 0.0) return;
        const double radius2 = 4.0 * delta * lg;
        const double radius = std::sqrt(radius2);
        const Vector center = propagator(spec.model(), -delta).E * spec.center().x;
        const double t_slice = spec.center().t - delta;
        const double ball_vol = vol_unit * std::pow(radius, n_dim);

        Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
        double mean = 0.0, m2 = 0.0, local_max = 0.0;
        Vector xbuf(n_dim);
        for (int s = 0; s < n_per_slice; ++s) {
            const double f = std::pow(rng.uniform01(), 1.0 / n_dim);
            const Vector dir = rng.on_sphere(n_dim);
            const double rho = radius * f;
            const double q = radius2 * (1.0 - f * f);
            xbuf = center + rho * dir;
            const double val = u(xbuf, t_slice);
            local_max = std::max(local_max, std::abs(val));
            const double y = kernel_value(kc, delta, rho * rho, q) * val;
            const double d1 = y - mean;
            mean += d1 / (s + 1);
            m2 += d1 * (y - mean);
        }
        const double var = n_per_slice > 1 ? m2 / (n_per_slice - 1) : 0.0;
        partial[i] = jac * ball_vol * mean;
        partial_var[i] = (jac * ball_vol) * (jac * ball_vol) * var / n_per_slice;
        partial_max[i] = local_max;
    });

    QuadOutcome out;
    for (int i = 0; i < n_slices; ++i) {
        out.integral += partial[i];
        out.variance += partial_var[i];
        out.max_abs_u = std::max(out.max_abs_u, partial_max[i]);
    }
    out.integral /= spec.r();
    out.variance /= spec.r() * spec.r();
    return out;
}

} // namespace

QuadratureConfig default_quadrature(int n_dim) {
    QuadratureConfig cfg;
    if (n_dim <= 2) {
        cfg = {QuadScheme::TensorGrid, 160, 48, 1};
    } else if (n_dim == 3) {
        cfg = {QuadScheme::TensorGrid, 128, 16, 1};
    } else {
        cfg = {QuadScheme::MonteCarlo, 128, 8192, 1};
    }
    return cfg;
}

OnionSpec::OnionSpec(GroupPoint center, double r, int p, DriftModel model)
    : center_(std::move(center)), r_(r), p_(p), model_(std::move(model)) {
    if (!(r_ > 0.0) || !std::isfinite(r_)) throw InvalidInput("OnionSpec: r must be positive");
    if (p_ < 1) throw InvalidInput("OnionSpec: p must be >= 1");
    if (center_.x.size() != model_.dim()) throw InvalidInput("OnionSpec: dimension mismatch");
    if (!model_.antisymmetric()) throw InvalidInput("OnionSpec: requires antisymmetric B");
    delta_max_ = std::pow(r_, 2.0 / (model_.dim() + p_)) / (4.0 * kPi);
    if (!(delta_max_ > 0.0) || !std::isfinite(delta_max_))
        throw DomainError("OnionSpec: empty onion (delta_max underflow)");
}

std::optional<OnionSlice> onion_slice(const OnionSpec& spec, double delta) {
    if (!(delta > 0.0)) throw InvalidInput("onion_slice: delta must be positive");
    if (delta >= spec.delta_max()) return std::nullopt;
    const KernelConstants kc = kernel_constants(spec);
    const double lg = slice_log_term(kc, delta);
    if (lg <= 0.0) return std::nullopt;
    OnionSlice slice;
    slice.delta = delta;
    slice.center = propagator(spec.model(), -delta).E * spec.center().x;
    slice.radius = std::sqrt(4.0 * delta * lg);
    return slice;
}

bool onion_contains(const OnionSpec& spec, const GroupPoint& zeta) {
    if (zeta.x.size() != spec.dim()) throw InvalidInput("onion_contains: dimension mismatch");
    const double delta = spec.center().t - zeta.t;
    if (delta <= 0.0) return false;
    const KernelConstants kc = kernel_constants(spec);
    const double lg = slice_log_term(kc, delta);
    if (lg <= 0.0) return false;
    const Vector center = propagator(spec.model(), -delta).E * spec.center().x;
    return (zeta.x - center).squaredNorm() < 4.0 * delta * lg;
}

double kernel_W(const GroupPoint& z) {
    if (z.t == 0.0) throw DomainError("kernel_W: singular at t = 0");
    const double ratio2 = z.x.squaredNorm() / (z.t * z.t);
    return 0.25 * ratio2;
}

double kernel_R(const GroupPoint& z, double r, int p, const DriftModel& model) {
    if (!(r > 0.0)) throw InvalidInput("kernel_R: r must be positive");
    if (p < 1) throw InvalidInput("kernel_R: p must be >= 1");
    if (z.x.size() != model.dim()) throw InvalidInput("kernel_R: dimension mismatch");
    if (!(z.t < 0.0)) throw DomainError("kernel_R: point outside the onion (t >= 0)");
    const double delta = -z.t;
    const double lg = std::log(r) - 0.5 * (model.dim() + p) * std::log(4.0 * kPi * delta) -
                      z.x.squaredNorm() / (4.0 * delta);
    if (lg < 0.0) throw DomainError("kernel_R: point outside the onion");
    return std::sqrt(4.0 * delta * lg);
}

double weight_kernel(const GroupPoint& z, double r, int p, const DriftModel& model) {
    const double radial = kernel_R(z, r, p, model);
    const double w = kernel_W(z);
    const double cp2 = p / (4.0 * (p + 2.0));
    const double rt = radial / z.t;
    return unit_ball_volume(p) * std::pow(radial, p) * (w + cp2 * rt * rt);
}

double unit_ball_volume(int p) {
    if (p < 0) throw InvalidInput("unit_ball_volume: negative dimension");
    return std::pow(kPi, 0.5 * p) / std::tgamma(0.5 * p + 1.0);
}

MeanValueResult mean_value(const SolutionField& u, const OnionSpec& spec,
                           const QuadratureConfig& cfg) {
    if (cfg.n_slices < 1 || cfg.n_per_slice < 1)
        throw InvalidInput("mean_value: quadrature counts must be >= 1");
    if (std::isfinite(u.domain_floor) &&
        !(spec.center().t - spec.delta_max() > u.domain_floor))
        throw DomainError("mean_value: onion not contained in the field's domain");

    MeanValueResult res;
    if (cfg.scheme == QuadScheme::TensorGrid) {
        const QuadOutcome coarse = integrate_grid(u, spec, cfg.n_slices, cfg.n_per_slice);
        const QuadOutcome fine = integrate_grid(u, spec, 2 * cfg.n_slices, cfg.n_per_slice);
        res.value = fine.integral;
        res.error_estimate =
            std::max(std::abs(fine.integral - coarse.integral) / 3.0,
                     8.0 * std::numeric_limits<double>::epsilon() * std::abs(fine.integral));
        res.field_scale = std::max(coarse.max_abs_u, fine.max_abs_u);
    } else {
        const QuadOutcome mc = integrate_mc(u, spec, cfg.n_slices, cfg.n_per_slice, cfg.seed);
        res.value = mc.integral;
        res.error_estimate = 3.0 * std::sqrt(mc.variance);
        res.field_scale = mc.max_abs_u;
    }
    return res;
}

NormalizationReport onion_volume_weight_check(const OnionSpec& spec,
                                              const QuadratureConfig& cfg) {
    SolutionField one;
    one.eval = [](const Vector&, double) { return 1.0; };
    one.label = "constant 1";
    one.harmonic = true;
    const MeanValueResult mv = mean_value(one, spec, cfg);
    return NormalizationReport{mv.value, std::abs(mv.value - 1.0), mv.error_estimate};
}

} // namespace oukl
