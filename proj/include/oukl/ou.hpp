#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oukl/drift.hpp"

namespace oukl {

/// OU generator tr(Q D^2)/2 + <Bx, grad>; any real B is accepted here.
/// The Kalman condition is evaluated once at construction.
class OUModel {
public:
    explicit OUModel(DriftModel drift);

    const DriftModel& drift() const { return drift_; }
    int dim() const { return drift_.dim(); }
    const Matrix& B() const { return drift_.B(); }
    const Matrix& Q() const { return drift_.Q(); }
    bool kalman() const { return kalman_; }

private:
    DriftModel drift_;
    bool kalman_;
};

/// rank [Q, BQ, ..., B^{N-1}Q] == N (singular values above N ||K||_2 1e-12).
bool kalman_rank(const DriftModel& model);

/// Q_t = int_0^t exp(sB) Q exp(sB^T) ds by adaptive composite Simpson,
/// relative accuracy 1e-10. Throws on t <= 0.
Matrix gramian(const OUModel& model, double t);

struct HrResult {
    bool satisfied = false;
    /// Eigenvalues within tolerance of the imaginary axis failed the
    /// semisimplicity rank test.
    bool borderline = false;
    std::string detail;
};

/// Real-Jordan splitting test: all eigenvalues off the open left half-plane
/// must form either nothing, a semisimple zero of multiplicity <= 2, or one
/// simple conjugate pair +-i alpha; everything else must satisfy Re < -1e-10.
HrResult hr_classify(const Matrix& b);

enum class IntegralTestResult { Divergent, Convergent, Inconclusive };

struct GrowthEvidence {
    double poly_exponent = 0.0;  ///< a in log det Q_t ~ a log t + b
    double poly_exponent_stderr = 0.0;
    double poly_rss = 0.0;
    double exp_rate = 0.0;       ///< c in log det Q_t ~ c t + d
    double exp_rss = 0.0;
    bool poly_wins = true;
    int n_points = 0;
    double t_max_used = 0.0;
};

struct IntegralTestReport {
    IntegralTestResult result = IntegralTestResult::Inconclusive;
    GrowthEvidence evidence;
};

/// Fits log det Q_t on a log-spaced grid of [1, t_max] against polynomial
/// and exponential growth; divergent iff the integrand 1/sqrt(det Q_t) has a
/// divergent tail (poly fit wins with exponent a <= 2).
IntegralTestReport integral_test(const OUModel& model, double t_max = 1e4,
                                 int n_points = 64);

enum class RecurrenceClass { Recurrent, Transient, Unknown };

struct RecurrenceVerdict {
    bool kalman_ok = false;
    bool hr = false;
    bool hr_borderline = false;
    IntegralTestResult integral = IntegralTestResult::Inconclusive;
    RecurrenceClass verdict = RecurrenceClass::Unknown;
    GrowthEvidence evidence;
};

/// hr and the integral test must agree, otherwise the verdict is Unknown
/// with both evidences attached.
RecurrenceVerdict classify_recurrence(const OUModel& model, double t_max = 1e4,
                                      int n_points = 64);

struct Path {
    std::vector<double> t;
    Matrix states; ///< one row per time, N columns
};

/// Exact-in-distribution sampling: X_{t+h} = exp(hB) X_t + G_h with
/// G_h ~ N(0, Q_h) through the Cholesky factor of Q_h (eigenvalue square
/// root with floor 1e-14 as fallback). No Euler error in the marginals.
/// The stream is derived from (seed, path_index).
Path sample_path(const OUModel& model, const Vector& x0,
                 const std::vector<double>& t_grid, std::uint64_t seed,
                 std::uint64_t path_index = 0);

/// p_t(x,y) = exp(-|Q_t^{-1/2}(e^{tB} x - y)|^2 / 2) / sqrt((2 pi)^N det Q_t).
double transition_density(const OUModel& model, double t, const Vector& x,
                          const Vector& y);

struct BallRegion {
    Vector center;
    double radius = 0.0;
};

struct HittingEstimate {
    Vector x;
    BallRegion target;
    double horizon = 0.0;
    std::int64_t n_paths = 0;
    double step = 0.0;
    double p_hat = 0.0;
    double ci_lo = 0.0; ///< Wilson 95%
    double ci_hi = 0.0;
    std::int64_t hits = 0;
    /// Discrete monitoring misses continuous crossings: p_hat underestimates.
    bool discrete_monitoring_bias = true;
};

/// Fraction of exact-transition paths entering the ball by the horizon.
/// Per-path streams (seed, path index); extending the horizon with the same
/// seed extends paths instead of resampling them.
HittingEstimate hitting_probability(const OUModel& model, const Vector& x,
                                    const BallRegion& ball, double horizon,
                                    std::int64_t n_paths, double step,
                                    std::uint64_t seed);

struct OccupationEstimate {
    double mc_mean = 0.0;
    double mc_ci_halfwidth = 0.0; ///< 3 standard errors
    double quadrature_value = 0.0; ///< int_0^T P_t 1_ball(x) dt from the density
    double horizon = 0.0;
    std::int64_t n_paths = 0;
    double step = 0.0;
};

/// Truncated expected occupation time of the ball, Monte Carlo vs transition
/// density quadrature.
OccupationEstimate occupation_time(const OUModel& model, const Vector& x,
                                   const BallRegion& ball, double horizon,
                                   std::int64_t n_paths, double step,
                                   std::uint64_t seed);

struct ExcessivityReport {
    struct Row {
        double radius = 0.0;   ///< |x| of the grid point
        double phi_hat = 0.0;  ///< truncated-horizon hitting probability
        double se_phi = 0.0;
        std::vector<double> p_r_phi; ///< averaged phi(X_r^x), one per r
        std::vector<double> se_pr;
    };
    std::vector<double> r_list;
    std::vector<Row> rows;
    bool excessive_ok = false; ///< P_r phi <= phi + 3 sigma everywhere
    bool monotone_ok = false;  ///< nondecreasing as r decreases, within noise
    double sigma_budget = 0.0;
};

/// Statistical check of P_r phi <= phi and P_s phi -> phi as s -> 0 for
/// phi = hitting probability of the ball. Requires a rotation-invariant
/// configuration (Q = q I, symmetric part of B scalar, centered ball) so the
/// grid estimate of phi interpolates radially.
ExcessivityReport excessivity_check(const OUModel& model, const BallRegion& ball,
                                    const std::vector<Vector>& x_grid,
                                    const std::vector<double>& r_list,
                                    double horizon, std::int64_t n_paths,
                                    double step, std::uint64_t seed);

} // namespace oukl
