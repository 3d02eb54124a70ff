#include "oukl/fields.hpp"

namespace oukl {

double kolmogorov_residual(const SolutionField& u, const DriftModel& model,
                           const Vector& x, double t, double h) {
    const int n = model.dim();
    const double u0 = u(x, t);
    const Vector bx = model.B() * x;
    double laplacian = 0.0;
    double drift = 0.0;
    Vector xs = x;
    for (int i = 0; i < n; ++i) {
        xs[i] = x[i] + h;
        const double up = u(xs, t);
        xs[i] = x[i] - h;
        const double um = u(xs, t);
        xs[i] = x[i];
        laplacian += (up - 2.0 * u0 + um) / (h * h);
        drift += bx[i] * (up - um) / (2.0 * h);
    }
    const double dt = (u(x, t + h) - u(x, t - h)) / (2.0 * h);
    return laplacian + drift - dt;
}

} // namespace oukl
