#pragma once

#include <Eigen/Core>

namespace oukl {

/// Matrix exponential by scaling-and-squaring with a truncated Taylor core.
/// Relative accuracy ~1e-13 for ||A||_1 up to a few hundred. Throws
/// InvalidInput on non-finite entries.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

} // namespace oukl
