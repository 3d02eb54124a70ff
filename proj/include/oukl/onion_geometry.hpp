#pragma once

#include <cstdint>
#include <vector>

#include "oukl/mvf.hpp"

namespace oukl {

/// Inclusion evidence for one (r, z) pair: the smallest sampled theta with
/// Omega_{theta r}(0) containing Omega_r(z), against the constant
/// reconstructed from the inclusion lemma's proof.
struct ThetaReport {
    double r = 0.0;
    GroupPoint z;
    double theta_empirical = 0.0;
    double theta_analytic = 0.0;
    bool inclusion_verified = false;
    int samples = 0;
};

/// The proof's constants: c0 = 2/e + 8 pi/(N+p),
/// c1 = (1+4pi) log(1/(1+4pi)) (negative; the infimum of s log(1/s) on
/// [4pi, 1+4pi] sits at the right endpoint), c2 = 8 pi/(N+p).
struct ThetaConstants {
    double c0;
    double c1;
    double c2;
};

ThetaConstants theta_proof_constants(int n_dim, int p);

/// theta = exp((c0 - c1)/c2) * 1.01, the smallest constant (plus 1% slack)
/// satisfying c0 < c1 + c2 log theta. Depends only on N + p.
double analytic_theta(int n_dim, int p);

/// k points of Sigma_r = { (x, t) : t = -r^{2/(N+p)}, |x|^2 < -4t }:
/// the extremes x = 0 and |x| = 2 r^{1/(N+p)} (1 - 1e-9), plus k-2 uniform
/// ball samples.
std::vector<GroupPoint> sigma_sample(double r, const DriftModel& model, int p,
                                     int k, std::uint64_t seed);

struct BoundaryResolution {
    int n_dirs = 64;
    int n_depths = 64;
};

/// Bisection over theta in [1, analytic_theta * hi_factor] of the predicate
/// "every boundary sample of Omega_r^(p)(z) lies in Omega_{theta r}^(p)(0)".
/// Throws LemmaViolation if the predicate fails even at the top of the
/// bracket (must never happen). Pre: z in Sigma_r.
double empirical_theta(double r, const GroupPoint& z, const DriftModel& model,
                       int p, double rel_tol = 1e-3,
                       BoundaryResolution res = BoundaryResolution{},
                       double hi_factor = 10.0);

/// One ThetaReport per (r, Sigma_r sample); per-r RNG streams derived from
/// the seed so the sweep parallelizes deterministically.
std::vector<ThetaReport> two_onion_sweep(const std::vector<double>& r_grid,
                                         const DriftModel& model, int p, int k,
                                         std::uint64_t seed,
                                         BoundaryResolution res = BoundaryResolution{});

} // namespace oukl
