#include "oukl/ou.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "oukl/errors.hpp"
#include "oukl/matexp.hpp"
#include "oukl/parallel.hpp"
#include "oukl/rng.hpp"

namespace oukl {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxDim = 8;

Matrix gramian_integrand(const Matrix& b, const Matrix& q, double s) {
    const Matrix e = expm(Matrix(s * b));
    return e * q * e.transpose();
}

// Composite Simpson on [a, b], doubling until the Frobenius change drops
// below rel_tol.
Matrix simpson_panel(const Matrix& b, const Matrix& q, double a, double t,
                     double rel_tol) {
    const int n0 = 8;
    Matrix prev;
    for (int n = n0; n <= (1 << 16); n *= 2) {
        const double h = (t - a) / n;
        Matrix sum = gramian_integrand(b, q, a) + gramian_integrand(b, q, t);
        for (int i = 1; i < n; ++i)
            sum += (i % 2 ? 4.0 : 2.0) * gramian_integrand(b, q, a + i * h);
        sum *= h / 3.0;
        if (n > n0) {
            const double change = (sum - prev).norm();
            if (change <= rel_tol * std::max(sum.norm(), 1e-300)) return sum;
        }
        prev = sum;
    }
    return prev;
}

Matrix gramian_integral(const Matrix& b, const Matrix& q, double t) {
    // Panels sized to the drift's rotation/growth scale keep Simpson in its
    // asymptotic regime on long windows.
    const double bnorm = b.cwiseAbs().colwise().sum().maxCoeff();
    const int panels = std::clamp(static_cast<int>(std::ceil(t * std::max(bnorm, 0.25) / 4.0)),
                                  1, 16384);
    Matrix total = Matrix::Zero(b.rows(), b.cols());
    const double h = t / panels;
    for (int k = 0; k < panels; ++k)
        total += simpson_panel(b, q, k * h, (k + 1) * h, 1e-12);
    return total;
}

// Accumulates Q_t along an ascending time sweep using
// Q_{t+d} = Q_t + e^{tB} Q_d e^{tB^T}.
class GramianSweep {
public:
    explicit GramianSweep(const OUModel& model)
        : model_(model),
          q_(Matrix::Zero(model.dim(), model.dim())),
          e_(Matrix::Identity(model.dim(), model.dim())) {}

    const Matrix& advance(double t) {
        if (t < t_) throw InvalidInput("GramianSweep: times must ascend");
        if (t > t_) {
            const double d = t - t_;
            const Matrix inc = gramian_integral(model_.B(), model_.Q(), d);
            q_ += e_ * inc * e_.transpose();
            e_ = e_ * expm(Matrix(d * model_.B()));
            t_ = t;
        }
        return q_;
    }

    double time() const { return t_; }

private:
    const OUModel& model_;
    double t_ = 0.0;
    Matrix q_;
    Matrix e_;
};

int svd_rank(const Eigen::JacobiSVD<Matrix>& svd, int n) {
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return 0;
    const double tol = n * sv[0] * 1e-12;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv[i] > tol) ++rank;
    return rank;
}

int real_rank(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd_rank(svd, static_cast<int>(std::max(m.rows(), m.cols())));
}

int complex_rank(const Eigen::MatrixXcd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return 0;
    const double tol = std::max(m.rows(), m.cols()) * sv[0] * 1e-12;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv[i] > tol) ++rank;
    return rank;
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rss = 0.0;
    double slope_stderr = 0.0;
};

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    LinearFit fit;
    const double denom = n * sxx - sx * sx;
    fit.slope = denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
    fit.intercept = (sy - fit.slope * sx) / n;
    for (std::size_t i = 0; i < n; ++i) {
        const double res = y[i] - fit.slope * x[i] - fit.intercept;
        fit.rss += res * res;
    }
    if (n > 2 && denom > 0.0)
        fit.slope_stderr = std::sqrt(fit.rss / (n - 2.0) * n / denom);
    return fit;
}

// log det of a symmetric positive definite matrix; throws KalmanViolation
// when it is not positive definite.
double logdet_spd(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    double sum = 0.0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        const double ev = es.eigenvalues()[i];
        if (ev <= 0.0) throw KalmanViolation("det Q_t <= 0 on the test grid");
        sum += std::log(ev);
    }
    return sum;
}

// One exact transition step: x -> E x + L g.
struct StepOp {
    int n = 0;
    bool identity_e = false;
    bool diagonal_l = false;
    bool used_fallback = false;
    std::array<double, kMaxDim * kMaxDim> e{};
    std::array<double, kMaxDim * kMaxDim> l{};
};

StepOp make_step(const OUModel& model, double h) {
    if (!(h > 0.0)) throw InvalidInput("transition step must be positive");
    const int n = model.dim();
    if (n > kMaxDim) throw InvalidInput("path sampling supports N <= 8");
    StepOp op;
    op.n = n;
    const Matrix e = expm(Matrix(h * model.B()));
    const Matrix qh = gramian_integral(model.B(), model.Q(), h);
    Matrix l;
    Eigen::LLT<Matrix> llt(qh);
    if (llt.info() == Eigen::Success) {
        l = llt.matrixL();
    } else {
        // conditioning fallback: eigenvalue square root with floor
        Eigen::SelfAdjointEigenSolver<Matrix> es(qh);
        Vector d = es.eigenvalues().cwiseMax(1e-14);
        l = es.eigenvectors() * d.cwiseSqrt().asDiagonal();
        op.used_fallback = true;
    }
    op.identity_e = (e - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() == 0.0;
    double offdiag = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            op.e[i * n + j] = e(i, j);
            op.l[i * n + j] = l(i, j);
            if (i != j) offdiag = std::max(offdiag, std::abs(l(i, j)));
        }
    op.diagonal_l = offdiag == 0.0;
    return op;
}

inline void apply_step(const StepOp& op, double* x, Rng& rng) {
    const int n = op.n;
    double g[kMaxDim];
    for (int i = 0; i < n; ++i) g[i] = rng.normal();
    double noise[kMaxDim];
    if (op.diagonal_l) {
        for (int i = 0; i < n; ++i) noise[i] = op.l[i * n + i] * g[i];
    } else {
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += op.l[i * n + j] * g[j];
            noise[i] = s;
        }
    }
    if (op.identity_e) {
        for (int i = 0; i < n; ++i) x[i] += noise[i];
    } else {
        double y[kMaxDim];
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += op.e[i * n + j] * x[j];
            y[i] = s + noise[i];
        }
        for (int i = 0; i < n; ++i) x[i] = y[i];
    }
}

double wilson_z() { return 1.959963984540054; }

void wilson_interval(double p_hat, double n, double& lo, double& hi) {
    const double z = wilson_z();
    const double denom = 1.0 + z * z / n;
    const double center = (p_hat + z * z / (2.0 * n)) / denom;
    const double half =
        z * std::sqrt(p_hat * (1.0 - p_hat) / n + z * z / (4.0 * n * n)) / denom;
    lo = std::max(0.0, center - half);
    hi = std::min(1.0, center + half);
}

// int_ball p_t(x, y) dy with precomputed mean and Cholesky of Q_t.
double ball_mass(const Matrix& l_chol, double logdet, const Vector& mean,
                 const BallRegion& ball_in) {
    const int n = static_cast<int>(mean.size());
    const double log_norm = -0.5 * (n * std::log(2.0 * kPi) + logdet);
    const auto density = [&](const Vector& y) {
        const Vector z = l_chol.triangularView<Eigen::Lower>().solve(y - mean);
        return std::exp(log_norm - 0.5 * z.squaredNorm());
    };
    // analytic early-outs: the grid below cannot resolve a spike that is
    // much narrower than the ball
    const double sigma = l_chol.norm(); // >= largest std deviation
    const double dist = (mean - ball_in.center).norm();
    if (dist + 8.0 * sigma <= ball_in.radius) return 1.0;
    if (dist - 8.0 * sigma >= ball_in.radius) return 0.0;
    // clip to the density's support so huge target balls keep resolution
    BallRegion ball = ball_in;
    ball.radius = std::min(ball.radius, dist + 12.0 * sigma);

    // equal-measure midpoint product rules; ball masses only need a few
    // percent accuracy relative to the Monte Carlo CIs they cross-check
    static const int kRad = 24;
    double total = 0.0;
    if (n == 1) {
        const int m = 64;
        for (int i = 0; i < m; ++i) {
            const double y = ball.center[0] - ball.radius +
                             ball.radius * 2.0 * (i + 0.5) / m;
            Vector yv(1);
            yv << y;
            total += density(yv) * (2.0 * ball.radius / m);
        }
    } else if (n == 2) {
        const int m_ang = 48;
        for (int i = 0; i < kRad; ++i) {
            const double f = (i + 0.5) / kRad;
            const double rho = ball.radius * std::sqrt(f); // equal-area radii
            const double wr = ball.radius * ball.radius * kPi / kRad / m_ang;
            for (int a = 0; a < m_ang; ++a) {
                const double th = 2.0 * kPi * (a + 0.5) / m_ang;
                Vector y(2);
                y << ball.center[0] + rho * std::cos(th),
                     ball.center[1] + rho * std::sin(th);
                total += density(y) * wr;
            }
        }
    } else if (n == 3) {
        const int m_mu = 16, m_phi = 24;
        for (int i = 0; i < kRad; ++i) {
            const double f = (i + 0.5) / kRad;
            const double rho = ball.radius * std::cbrt(f); // equal-volume radii
            const double wr = (4.0 / 3.0) * kPi * std::pow(ball.radius, 3) /
                              (kRad * m_mu * m_phi);
            for (int a = 0; a < m_mu; ++a) {
                const double mu = -1.0 + 2.0 * (a + 0.5) / m_mu;
                const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
                for (int b2 = 0; b2 < m_phi; ++b2) {
                    const double ph = 2.0 * kPi * (b2 + 0.5) / m_phi;
                    Vector y(3);
                    y << ball.center[0] + rho * s * std::cos(ph),
                         ball.center[1] + rho * s * std::sin(ph),
                         ball.center[2] + rho * mu;
                    total += density(y) * wr;
                }
            }
        }
    } else {
        throw InvalidInput("occupation quadrature supports N <= 3");
    }
    return total;
}

} // namespace

OUModel::OUModel(DriftModel drift) : drift_(std::move(drift)) {
    kalman_ = kalman_rank(drift_);
}

bool kalman_rank(const DriftModel& model) {
    const int n = model.dim();
    Matrix block(n, n * n);
    Matrix power = Matrix::Identity(n, n);
    for (int k = 0; k < n; ++k) {
        block.middleCols(k * n, n) = power * model.Q();
        power = model.B() * power;
    }
    Eigen::JacobiSVD<Matrix> svd(block);
    return svd_rank(svd, n) == n;
}

Matrix gramian(const OUModel& model, double t) {
    if (!(t > 0.0)) throw InvalidInput("gramian: t must be positive");
    Matrix q = gramian_integral(model.B(), model.Q(), t);
    // symmetrize away roundoff
    return 0.5 * (q + q.transpose());
}

HrResult hr_classify(const Matrix& b) {
    if (b.rows() != b.cols() || b.rows() == 0)
        throw InvalidInput("hr_classify: B must be square");
    const int n = static_cast<int>(b.rows());
    const double atol = 1e-10;
    Eigen::EigenSolver<Matrix> es(b);
    const Eigen::VectorXcd eigs = es.eigenvalues();

    std::vector<std::complex<double>> axis;
    for (int i = 0; i < n; ++i) {
        const auto lam = eigs[i];
        if (lam.real() > atol)
            return HrResult{false, false, "eigenvalue with positive real part"};
        if (lam.real() >= -atol) axis.push_back(lam);
    }
    if (axis.empty()) return HrResult{true, false, "B stable"};
    if (axis.size() > 2)
        return HrResult{false, false, "non-stable part exceeds dimension 2"};

    const auto is_zero = [&](std::complex<double> c) { return std::abs(c) <= atol; };
    if (axis.size() == 1) {
        if (!is_zero(axis[0]))
            return HrResult{false, false, "unpaired eigenvalue on the axis"};
        if (real_rank(b) == n - 1)
            return HrResult{true, false, "simple zero eigenvalue"};
        return HrResult{false, true, "zero eigenvalue fails semisimplicity"};
    }
    if (is_zero(axis[0]) && is_zero(axis[1])) {
        if (real_rank(b) == n - 2)
            return HrResult{true, false, "semisimple double zero (alpha = 0)"};
        return HrResult{false, true, "double zero fails semisimplicity"};
    }
    std::complex<double> lam = axis[0].imag() >= 0.0 ? axis[0] : axis[1];
    std::complex<double> mu = axis[0].imag() >= 0.0 ? axis[1] : axis[0];
    if (std::abs(lam - std::conj(mu)) > atol * (1.0 + std::abs(lam)))
        return HrResult{false, false, "axis eigenvalues are not a conjugate pair"};
    Eigen::MatrixXcd shifted = b.cast<std::complex<double>>();
    shifted.diagonal().array() -= lam;
    if (complex_rank(shifted) == n - 1)
        return HrResult{true, false, "rotation pair +-i alpha"};
    return HrResult{false, true, "imaginary pair fails semisimplicity"};
}

IntegralTestReport integral_test(const OUModel& model, double t_max, int n_points) {
    if (!(t_max > 1.0)) throw InvalidInput("integral_test: t_max must exceed 1");
    if (n_points < 8) throw InvalidInput("integral_test: need at least 8 grid points");
    if (!model.kalman())
        throw KalmanViolation("integral_test: Kalman condition fails, det Q_t degenerate");

    std::vector<double> log_t, log_det, times;
    GramianSweep sweep(model);
    for (int i = 0; i < n_points; ++i) {
        const double t = std::exp(std::log(t_max) * i / (n_points - 1.0));
        const Matrix& q = sweep.advance(t);
        if (!q.allFinite() || q.cwiseAbs().maxCoeff() > 1e280) break; // growth overflow
        const double ld = logdet_spd(q);
        times.push_back(t);
        log_t.push_back(std::log(t));
        log_det.push_back(ld);
        if (ld > 600.0) break; // enough growth evidence
    }

    IntegralTestReport rep;
    rep.evidence.n_points = static_cast<int>(times.size());
    rep.evidence.t_max_used = times.empty() ? 0.0 : times.back();
    if (times.size() < 8) {
        rep.result = IntegralTestResult::Inconclusive;
        return rep;
    }

    const LinearFit poly = least_squares(log_t, log_det);
    const LinearFit expo = least_squares(times, log_det);
    rep.evidence.poly_exponent = poly.slope;
    rep.evidence.poly_exponent_stderr = poly.slope_stderr;
    rep.evidence.poly_rss = poly.rss;
    rep.evidence.exp_rate = expo.slope;
    rep.evidence.exp_rss = expo.rss;
    // The exponential model only wins with a better fit AND at least one
    // e-fold of actual growth across the window; otherwise flat cases with
    // transients would masquerade as exponential.
    const bool genuine_exp = expo.rss < poly.rss &&
                             expo.slope * (rep.evidence.t_max_used - 1.0) > 1.0;
    rep.evidence.poly_wins = !genuine_exp;

    if (!rep.evidence.poly_wins) {
        rep.result = IntegralTestResult::Convergent;
    } else if (poly.slope <= 2.0) {
        rep.result = IntegralTestResult::Divergent; // integrand >~ t^{-a/2}, a/2 <= 1
    } else if (poly.slope <= 2.1) {
        rep.result = IntegralTestResult::Inconclusive;
    } else {
        rep.result = IntegralTestResult::Convergent;
    }
    return rep;
}

RecurrenceVerdict classify_recurrence(const OUModel& model, double t_max, int n_points) {
    RecurrenceVerdict v;
    v.kalman_ok = model.kalman();
    const HrResult hr = hr_classify(model.B());
    v.hr = hr.satisfied;
    v.hr_borderline = hr.borderline;
    if (!v.kalman_ok) {
        v.verdict = RecurrenceClass::Unknown;
        return v;
    }
    const IntegralTestReport it = integral_test(model, t_max, n_points);
    v.integral = it.result;
    v.evidence = it.evidence;
    if (v.hr && it.result == IntegralTestResult::Divergent)
        v.verdict = RecurrenceClass::Recurrent;
    else if (!v.hr && it.result == IntegralTestResult::Convergent)
        v.verdict = RecurrenceClass::Transient;
    else
        v.verdict = RecurrenceClass::Unknown;
    return v;
}

Path sample_path(const OUModel& model, const Vector& x0,
                 const std::vector<double>& t_grid, std::uint64_t seed,
                 std::uint64_t path_index) {
    if (x0.size() != model.dim()) throw InvalidInput("sample_path: dimension mismatch");
    if (t_grid.empty()) throw InvalidInput("sample_path: empty time grid");
    if (!(t_grid.front() >= 0.0)) throw InvalidInput("sample_path: times start at 0");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1]))
            throw InvalidInput("sample_path: time grid must increase strictly");

    std::map<double, StepOp> ops;
    Rng rng = Rng::stream(seed, path_index);
    Path path;
    path.t = t_grid;
    path.states.resize(static_cast<int>(t_grid.size()), model.dim());

    double state[kMaxDim];
    for (int i = 0; i < model.dim(); ++i) state[i] = x0[i];
    double prev_t = 0.0;
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
        const double h = t_grid[k] - prev_t;
        if (h > 0.0) {
            auto it = ops.find(h);
            if (it == ops.end()) it = ops.emplace(h, make_step(model, h)).first;
            apply_step(it->second, state, rng);
        }
        for (int i = 0; i < model.dim(); ++i) path.states(static_cast<int>(k), i) = state[i];
        prev_t = t_grid[k];
    }
    return path;
}

double transition_density(const OUModel& model, double t, const Vector& x,
                          const Vector& y) {
    if (!(t > 0.0)) throw InvalidInput("transition_density: t must be positive");
    if (x.size() != model.dim() || y.size() != model.dim())
        throw InvalidInput("transition_density: dimension mismatch");
    const Matrix qt = gramian(model, t);
    Eigen::LLT<Matrix> llt(qt);
    if (llt.info() != Eigen::Success)
        throw KalmanViolation("transition_density: singular Q_t");
    const Matrix l = llt.matrixL();
    double logdet = 0.0;
    for (int i = 0; i < model.dim(); ++i) logdet += 2.0 * std::log(l(i, i));
    const Vector mean = expm(Matrix(t * model.B())) * x;
    const Vector z = l.triangularView<Eigen::Lower>().solve(mean - y);
    const int n = model.dim();
    return std::exp(-0.5 * z.squaredNorm() - 0.5 * (n * std::log(2.0 * kPi) + logdet));
}

HittingEstimate hitting_probability(const OUModel& model, const Vector& x,
                                    const BallRegion& ball, double horizon,
                                    std::int64_t n_paths, double step,
                                    std::uint64_t seed) {
    if (!(ball.radius > 0.0)) throw InvalidInput("hitting_probability: radius must be positive");
    if (!(step > 0.0)) throw InvalidInput("hitting_probability: step must be positive");
    if (!(horizon > 0.0)) throw InvalidInput("hitting_probability: horizon must be positive");
    if (n_paths < 1) throw InvalidInput("hitting_probability: need at least one path");
    if (x.size() != model.dim() || ball.center.size() != model.dim())
        throw InvalidInput("hitting_probability: dimension mismatch");

    const int n = model.dim();
    const StepOp op = make_step(model, step);
    const std::int64_t n_steps = static_cast<std::int64_t>(std::ceil(horizon / step - 1e-12));
    const double r2 = ball.radius * ball.radius;
    double c[kMaxDim], x0f[kMaxDim];
    for (int i = 0; i < n; ++i) {
        c[i] = ball.center[i];
        x0f[i] = x[i];
    }

    std::vector<std::uint8_t> hit(n_paths, 0);
    parallel_for(n_paths, [&](std::int64_t pi) {
        Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(pi));
        double state[kMaxDim];
        for (int i = 0; i < n; ++i) state[i] = x0f[i];
        auto inside = [&]() {
            double d2 = 0.0;
            for (int i = 0; i < n; ++i) {
                const double d = state[i] - c[i];
                d2 += d * d;
            }
            return d2 <= r2;
        };
        if (inside()) {
            hit[pi] = 1;
            return;
        }
        for (std::int64_t s = 0; s < n_steps; ++s) {
            apply_step(op, state, rng);
            if (inside()) {
                hit[pi] = 1;
                return;
            }
        }
    });

    std::int64_t hits = 0;
    for (const auto h : hit) hits += h;
    HittingEstimate est;
    est.x = x;
    est.target = ball;
    est.horizon = horizon;
    est.n_paths = n_paths;
    est.step = step;
    est.hits = hits;
    est.p_hat = static_cast<double>(hits) / static_cast<double>(n_paths);
    wilson_interval(est.p_hat, static_cast<double>(n_paths), est.ci_lo, est.ci_hi);
    return est;
}

OccupationEstimate occupation_time(const OUModel& model, const Vector& x,
                                   const BallRegion& ball, double horizon,
                                   std::int64_t n_paths, double step,
                                   std::uint64_t seed) {
    if (!(ball.radius > 0.0) || !(step > 0.0) || !(horizon > 0.0) || n_paths < 1)
        throw InvalidInput("occupation_time: bad parameters");
    if (x.size() != model.dim() || ball.center.size() != model.dim())
        throw InvalidInput("occupation_time: dimension mismatch");

    const int n = model.dim();
    const StepOp op = make_step(model, step);
    const std::int64_t n_steps = static_cast<std::int64_t>(std::ceil(horizon / step - 1e-12));
    const double r2 = ball.radius * ball.radius;
    double c[kMaxDim];
    for (int i = 0; i < n; ++i) c[i] = ball.center[i];

    std::vector<double> occ(n_paths, 0.0);
    parallel_for(n_paths, [&](std::int64_t pi) {
        Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(pi));
        double state[kMaxDim];
        for (int i = 0; i < n; ++i) state[i] = x[i];
        std::int64_t count = 0;
        for (std::int64_t s = 0; s < n_steps; ++s) {
            apply_step(op, state, rng);
            double d2 = 0.0;
            for (int i = 0; i < n; ++i) {
                const double d = state[i] - c[i];
                d2 += d * d;
            }
            if (d2 <= r2) ++count;
        }
        occ[pi] = step * static_cast<double>(count);
    });

    double mean = 0.0;
    for (const double v : occ) mean += v;
    mean /= static_cast<double>(n_paths);
    double var = 0.0;
    for (const double v : occ) var += (v - mean) * (v - mean);
    var = n_paths > 1 ? var / (n_paths - 1.0) : 0.0;

    // density-quadrature cross-check: int_0^T P_t 1_ball(x) dt
    const double t_min = std::clamp(1e-6 * horizon, 1e-9, 1e-3);
    const int n_t = 160;
    GramianSweep sweep(model);
    std::vector<double> ts(n_t), fs(n_t);
    for (int i = 0; i < n_t; ++i)
        ts[i] = std::exp(std::log(t_min) +
                         (std::log(horizon) - std::log(t_min)) * i / (n_t - 1.0));
    for (int i = 0; i < n_t; ++i) {
        const Matrix& qt = sweep.advance(ts[i]);
        Eigen::LLT<Matrix> llt(qt);
        if (llt.info() != Eigen::Success)
            throw KalmanViolation("occupation_time: singular Q_t");
        const Matrix l = llt.matrixL();
        double logdet = 0.0;
        for (int k = 0; k < n; ++k) logdet += 2.0 * std::log(l(k, k));
        const Vector meanv = expm(Matrix(ts[i] * model.B())) * x;
        fs[i] = ball_mass(l, logdet, meanv, ball);
    }
    // trapezoid in log t
    double quad = 0.0;
    for (int i = 0; i + 1 < n_t; ++i) {
        const double du = std::log(ts[i + 1]) - std::log(ts[i]);
        quad += 0.5 * (fs[i] * ts[i] + fs[i + 1] * ts[i + 1]) * du;
    }
    const double d0 = (x - ball.center).norm();
    if (d0 <= ball.radius) quad += t_min; // P_t ~ 1 on the initial sliver

    OccupationEstimate est;
    est.mc_mean = mean;
    est.mc_ci_halfwidth = 3.0 * std::sqrt(var / static_cast<double>(n_paths));
    est.quadrature_value = quad;
    est.horizon = horizon;
    est.n_paths = n_paths;
    est.step = step;
    return est;
}

ExcessivityReport excessivity_check(const OUModel& model, const BallRegion& ball,
                                    const std::vector<Vector>& x_grid,
                                    const std::vector<double>& r_list,
                                    double horizon, std::int64_t n_paths,
                                    double step, std::uint64_t seed) {
    const int n = model.dim();
    if (x_grid.empty() || r_list.empty())
        throw InvalidInput("excessivity_check: empty grid");
    // Rotation invariance: phi depends on |x| only, so the grid estimate can
    // be interpolated radially.
    const Matrix sym = 0.5 * (model.B() + model.B().transpose());
    const double trace_scale = sym.trace() / n;
    if ((sym - trace_scale * Matrix::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-12)
        throw InvalidInput("excessivity_check: symmetric part of B must be scalar");
    const double q00 = model.Q()(0, 0);
    if ((model.Q() - q00 * Matrix::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-12)
        throw InvalidInput("excessivity_check: Q must be a multiple of the identity");
    if (ball.center.cwiseAbs().maxCoeff() != 0.0)
        throw InvalidInput("excessivity_check: ball must be centered at the origin");

    ExcessivityReport rep;
    rep.r_list = r_list;

    struct Node {
        double radius;
        double phi;
        double se;
    };
    std::vector<Node> nodes;
    nodes.push_back(Node{ball.radius, 1.0, 0.0});
    // extend the table past the user grid so the one-step averages of
    // phi(X_r) never read far into the extrapolation tail
    std::vector<Vector> shells = x_grid;
    double r_user_max = 0.0;
    for (const auto& x : x_grid) r_user_max = std::max(r_user_max, x.norm());
    for (const double factor : {1.5, 2.2}) {
        Vector v = Vector::Zero(n);
        v[0] = r_user_max * factor;
        shells.push_back(v);
    }
    for (std::size_t i = 0; i < shells.size(); ++i) {
        std::uint64_t st = seed;
        const std::uint64_t sub = splitmix64(st) ^ (0x1000 + i);
        const HittingEstimate h =
            hitting_probability(model, shells[i], ball, horizon, n_paths, step, sub);
        const double se = std::sqrt(std::max(h.p_hat * (1.0 - h.p_hat), 1e-12) /
                                    static_cast<double>(n_paths));
        nodes.push_back(Node{shells[i].norm(), h.p_hat, se});
    }
    std::sort(nodes.begin(), nodes.end(),
              [](const Node& a, const Node& b) { return a.radius < b.radius; });

    const RecurrenceVerdict verdict = classify_recurrence(model);
    const double tail_power =
        verdict.verdict == RecurrenceClass::Transient ? std::max(0, n - 2) : 0.0;
    double max_se = 0.0;
    for (const auto& nd : nodes) max_se = std::max(max_se, nd.se);

    const auto phi_interp = [&](double rad) {
        if (rad <= nodes.front().radius) return 1.0;
        if (rad >= nodes.back().radius) {
            const auto& last = nodes.back();
            return last.phi * std::pow(last.radius / rad, tail_power);
        }
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
            if (rad <= nodes[i + 1].radius) {
                const double f = (rad - nodes[i].radius) /
                                 (nodes[i + 1].radius - nodes[i].radius);
                return nodes[i].phi + f * (nodes[i + 1].phi - nodes[i].phi);
            }
        }
        return nodes.back().phi;
    };

    rep.excessive_ok = true;
    rep.monotone_ok = true;
    std::vector<double> sorted_r = r_list;
    std::sort(sorted_r.begin(), sorted_r.end());

    for (std::size_t i = 0; i < x_grid.size(); ++i) {
        ExcessivityReport::Row row;
        row.radius = x_grid[i].norm();
        // phi at the exact grid point (not interpolated)
        row.phi_hat = phi_interp(row.radius);
        row.se_phi = max_se;
        for (std::size_t jr = 0; jr < sorted_r.size(); ++jr) {
            const double r = sorted_r[jr];
            const StepOp op = make_step(model, r);
            std::uint64_t st = seed;
            const std::uint64_t sub = splitmix64(st) ^ (0x9000 + i * 97 + jr);
            double mean = 0.0, m2 = 0.0;
            const std::int64_t m = n_paths;
            Rng rng = Rng::stream(sub, 0);
            for (std::int64_t k = 0; k < m; ++k) {
                double state[kMaxDim];
                for (int d = 0; d < n; ++d) state[d] = x_grid[i][d];
                apply_step(op, state, rng);
                double rad = 0.0;
                for (int d = 0; d < n; ++d) rad += state[d] * state[d];
                const double val = phi_interp(std::sqrt(rad));
                const double d1 = val - mean;
                mean += d1 / (k + 1);
                m2 += d1 * (val - mean);
            }
            const double se = std::sqrt((m > 1 ? m2 / (m - 1.0) : 0.0) /
                                        static_cast<double>(m));
            row.p_r_phi.push_back(mean);
            row.se_pr.push_back(se);
        }
        const double budget = 3.0 * std::sqrt(max_se * max_se +
                                              [&] {
                                                  double worst = 0.0;
                                                  for (const double s : row.se_pr)
                                                      worst = std::max(worst, s);
                                                  return worst * worst;
                                              }());
        rep.sigma_budget = std::max(rep.sigma_budget, budget);
        for (std::size_t jr = 0; jr < sorted_r.size(); ++jr) {
            if (row.p_r_phi[jr] > row.phi_hat + budget) rep.excessive_ok = false;
            if (jr + 1 < sorted_r.size() &&
                row.p_r_phi[jr] + budget < row.p_r_phi[jr + 1])
                rep.monotone_ok = false;
        }
        rep.rows.push_back(std::move(row));
    }
    // report r values in their sorted evaluation order
    rep.r_list = sorted_r;
    return rep;
}

} // namespace oukl
