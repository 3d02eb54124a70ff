#pragma once

#include "oukl/drift.hpp"

namespace oukl {

/// A point z = (x, t) of the homogeneous group structure on R^{N+1}
/// with law (x,t) o (y,tau) = (y + E(tau) x, t + tau).
struct GroupPoint {
    Vector x;
    double t = 0.0;
};

GroupPoint group_identity(int n);

/// a o b = (b.x + E(b.t) a.x, a.t + b.t).
GroupPoint compose(const GroupPoint& a, const GroupPoint& b, const DriftModel& model);

/// z^{-1} = (-E(-t) x, -t), the group inverse.
GroupPoint inverse(const GroupPoint& z, const DriftModel& model);

/// Fundamental solution of the Kolmogorov operator with antisymmetric drift:
///   Gamma(z, zeta) = (4 pi (t - tau))^{-N/2}
///                    exp(-|x - E(t-tau) xi|^2 / (4 (t - tau)))   if t > tau,
/// and 0 otherwise. Requires model.antisymmetric().
double fundamental_solution(const GroupPoint& z, const GroupPoint& zeta,
                            const DriftModel& model);

/// phi_p(z0, z) = Gamma(z0, z) / (4 pi (t0 - t))^{p/2}; zero when t >= t0.
double phi_p(const GroupPoint& z0, const GroupPoint& z, int p, const DriftModel& model);

/// Membership in the paraboloid P(z0) = z0 o { t < -|x|^2/4 }:
///   t < t0  and  |x - E(t-t0) x0|^2 / (4 (t0 - t)) < 1  (strict).
bool in_paraboloid(const GroupPoint& z, const GroupPoint& z0, const DriftModel& model);

/// T(x, z0) = t0 - (|x| + |x0|)^2 / 4. Every (x, t) with t < T lies in
/// P(z0); the bound uses the unitarity of E.
double paraboloid_time_bound(const Vector& x, const GroupPoint& z0);

} // namespace oukl
