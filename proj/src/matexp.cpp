#include "oukl/matexp.hpp"

#include <cmath>
#include <limits>

#include "oukl/errors.hpp"

namespace oukl {
namespace {

// Taylor sum followed by repeated squaring. Templated on the matrix type so
// the small fixed-size cases run without heap traffic; group-law evaluation
// sits inside quadrature loops.
template <typename Mat>
Mat expm_impl(const Mat& a) {
    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm1 > 0.5) {
        squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
    }
    const double scale = std::ldexp(1.0, -squarings);
    const Mat a_scaled = a * scale;

    Mat sum = Mat::Identity(a.rows(), a.cols());
    Mat term = sum;
    for (int k = 1; k <= 40; ++k) {
        term = (term * a_scaled) / static_cast<double>(k);
        sum += term;
        const double tnorm = term.cwiseAbs().maxCoeff();
        if (tnorm <= std::numeric_limits<double>::epsilon() * sum.cwiseAbs().maxCoeff())
            break;
    }
    for (int s = 0; s < squarings; ++s) sum = sum * sum;
    return sum;
}

} // namespace

Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) throw InvalidInput("expm: matrix must be square");
    if (!a.allFinite()) throw InvalidInput("expm: non-finite entries");
    switch (a.rows()) {
        case 1: {
            Eigen::MatrixXd r(1, 1);
            r(0, 0) = std::exp(a(0, 0));
            return r;
        }
        case 2: return expm_impl<Eigen::Matrix2d>(a);
        case 3: return expm_impl<Eigen::Matrix3d>(a);
        case 4: return expm_impl<Eigen::Matrix4d>(a);
        default: return expm_impl<Eigen::MatrixXd>(a);
    }
}

} // namespace oukl
