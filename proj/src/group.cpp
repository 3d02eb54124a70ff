#include "oukl/group.hpp"

#include <cmath>
#include <numbers>

#include "oukl/errors.hpp"

namespace oukl {
namespace {

void check_dims(const GroupPoint& z, const DriftModel& model, const char* who) {
    if (z.x.size() != model.dim())
        throw InvalidInput(std::string(who) + ": dimension mismatch");
}

void require_antisymmetric(const DriftModel& model, const char* who) {
    if (!model.antisymmetric())
        throw InvalidInput(std::string(who) + ": requires antisymmetric B");
}

} // namespace

GroupPoint group_identity(int n) { return GroupPoint{Vector::Zero(n), 0.0}; }

GroupPoint compose(const GroupPoint& a, const GroupPoint& b, const DriftModel& model) {
    check_dims(a, model, "compose");
    check_dims(b, model, "compose");
    const Matrix e = propagator(model, b.t).E;
    return GroupPoint{b.x + e * a.x, a.t + b.t};
}

GroupPoint inverse(const GroupPoint& z, const DriftModel& model) {
    check_dims(z, model, "inverse");
    const Matrix e = propagator(model, -z.t).E;
    return GroupPoint{-(e * z.x), -z.t};
}

double fundamental_solution(const GroupPoint& z, const GroupPoint& zeta,
                            const DriftModel& model) {
    check_dims(z, model, "fundamental_solution");
    check_dims(zeta, model, "fundamental_solution");
    require_antisymmetric(model, "fundamental_solution");
    const double dt = z.t - zeta.t;
    if (dt <= 0.0) return 0.0;
    const Matrix e = propagator(model, dt).E;
    const double d2 = (z.x - e * zeta.x).squaredNorm();
    const int n = model.dim();
    return std::pow(4.0 * std::numbers::pi * dt, -0.5 * n) * std::exp(-d2 / (4.0 * dt));
}

double phi_p(const GroupPoint& z0, const GroupPoint& z, int p, const DriftModel& model) {
    if (p < 1) throw InvalidInput("phi_p: p must be >= 1");
    const double dt = z0.t - z.t;
    if (dt <= 0.0) return 0.0;
    return fundamental_solution(z0, z, model) /
           std::pow(4.0 * std::numbers::pi * dt, 0.5 * p);
}

bool in_paraboloid(const GroupPoint& z, const GroupPoint& z0, const DriftModel& model) {
    check_dims(z, model, "in_paraboloid");
    check_dims(z0, model, "in_paraboloid");
    require_antisymmetric(model, "in_paraboloid");
    const double depth = z0.t - z.t;
    if (depth <= 0.0) return false;
    const Matrix e = propagator(model, z.t - z0.t).E;
    const double d2 = (z.x - e * z0.x).squaredNorm();
    return d2 < 4.0 * depth;
}

double paraboloid_time_bound(const Vector& x, const GroupPoint& z0) {
    const double s = x.norm() + z0.x.norm();
    return z0.t - 0.25 * s * s;
}

} // namespace oukl
