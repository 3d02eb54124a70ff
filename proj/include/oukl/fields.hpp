#pragma once

#include <functional>
#include <limits>
#include <string>

#include "oukl/drift.hpp"

namespace oukl {

/// An evaluatable scalar field u(x, t), valid for t > domain_floor.
/// Evaluation must be re-entrant: no shared mutable state.
struct SolutionField {
    std::function<double(const Vector&, double)> eval;
    double domain_floor = -std::numeric_limits<double>::infinity();
    std::string label;
    bool harmonic = false;

    double operator()(const Vector& x, double t) const { return eval(x, t); }
};

/// Finite-difference residual of Delta u + <Bx, grad u> - dt u at (x, t),
/// second-order central stencils with step h.
double kolmogorov_residual(const SolutionField& u, const DriftModel& model,
                           const Vector& x, double t, double h = 1e-3);

} // namespace oukl
