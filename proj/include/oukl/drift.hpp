#pragma once

#include <Eigen/Core>

#include "oukl/errors.hpp"

namespace oukl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Drift matrix B and diffusion matrix Q of the operator
///   div(Q grad)/2-style OU generator and its evolution counterpart.
/// Q defaults to the identity. Values are immutable after construction and
/// safe to share across workers.
class DriftModel {
public:
    /// Q = identity.
    explicit DriftModel(Matrix b);
    DriftModel(Matrix b, Matrix q);

    int dim() const { return dim_; }
    const Matrix& B() const { return b_; }
    const Matrix& Q() const { return q_; }

    /// True iff max |B_ij + B_ji| <= 1e-12. The group/mean-value/Harnack
    /// machinery requires this; the stochastic module accepts any B.
    bool antisymmetric() const { return antisymmetric_; }

    /// True iff Q is the identity matrix (exactly).
    bool unit_q() const { return unit_q_; }

private:
    int dim_;
    Matrix b_;
    Matrix q_;
    bool antisymmetric_;
    bool unit_q_;
};

/// E(tau) = exp(-tau B), the matrix entering the composition law.
struct Propagator {
    double tau;
    Matrix E;
};

/// Computes E(tau) = exp(-tau B) by scaling-and-squaring.
Propagator propagator(const DriftModel& model, double tau);

/// Convenience builders for the matrices the verification suites use.
DriftModel zero_drift(int n);
DriftModel rotation_drift_2d(double alpha = 1.0);
/// 3x3 antisymmetric with axis (a1,a2,a3).
DriftModel antisymmetric_drift_3d(double a1, double a2, double a3);

} // namespace oukl
