#include "oukl/drift.hpp"

#include <cmath>
#include <utility>

#include <Eigen/Eigenvalues>

#include "oukl/errors.hpp"
#include "oukl/matexp.hpp"

namespace oukl {
namespace {

void validate(const Matrix& b, const Matrix& q) {
    if (b.rows() == 0 || b.rows() != b.cols())
        throw InvalidInput("DriftModel: B must be square and non-empty");
    if (!b.allFinite()) throw InvalidInput("DriftModel: non-finite entries in B");
    if (q.rows() != b.rows() || q.cols() != b.cols())
        throw InvalidInput("DriftModel: Q must match the dimension of B");
    if (!q.allFinite()) throw InvalidInput("DriftModel: non-finite entries in Q");
    if ((q - q.transpose()).cwiseAbs().maxCoeff() != 0.0)
        throw InvalidInput("DriftModel: Q must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(q);
    const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() < -1e-12 * scale)
        throw InvalidInput("DriftModel: Q must be positive semidefinite");
}

} // namespace

DriftModel::DriftModel(Matrix b) : DriftModel(b, Matrix::Identity(b.rows(), b.cols())) {}

DriftModel::DriftModel(Matrix b, Matrix q) : b_(std::move(b)), q_(std::move(q)) {
    validate(b_, q_);
    dim_ = static_cast<int>(b_.rows());
    antisymmetric_ = (b_ + b_.transpose()).cwiseAbs().maxCoeff() <= 1e-12;
    unit_q_ = (q_ - Matrix::Identity(dim_, dim_)).cwiseAbs().maxCoeff() == 0.0;
}

Propagator propagator(const DriftModel& model, double tau) {
    if (!std::isfinite(tau)) throw InvalidInput("propagator: tau must be finite");
    return Propagator{tau, expm(Matrix(-tau * model.B()))};
}

DriftModel zero_drift(int n) { return DriftModel(Matrix::Zero(n, n)); }

DriftModel rotation_drift_2d(double alpha) {
    Matrix b(2, 2);
    b << 0.0, -alpha, alpha, 0.0;
    return DriftModel(b);
}

DriftModel antisymmetric_drift_3d(double a1, double a2, double a3) {
    Matrix b(3, 3);
    b << 0.0, -a3, a2,
         a3, 0.0, -a1,
        -a2, a1, 0.0;
    return DriftModel(b);
}

} // namespace oukl
