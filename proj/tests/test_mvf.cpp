#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>

#include "oukl/harnack.hpp"
#include "oukl/mvf.hpp"
#include "oukl/rng.hpp"

using namespace oukl;

namespace {

constexpr double kPi = std::numbers::pi;

// Independent oracle for the mean-value integral: uniform midpoint in delta,
// uniform midpoint in rho, trapezoid in angle. Deliberately shares no grid
// design with the implementation. N = 2 only.
double mv_oracle_2d(const SolutionField& u, const OnionSpec& spec, int n_dt = 8000,
                    int n_rad = 128, int n_ang = 64) {
    REQUIRE(spec.dim() == 2);
    const double dmax = spec.delta_max();
    const int p = spec.p();
    const double omega = unit_ball_volume(p);
    const double cp2 = p / (4.0 * (p + 2.0));
    double total = 0.0;
    for (int i = 0; i < n_dt; ++i) {
        const double delta = dmax * (i + 0.5) / n_dt;
        const auto slice = onion_slice(spec, delta);
        if (!slice) continue;
        const double t = spec.center().t - delta;
        const double r2 = slice->radius * slice->radius;
        double slice_sum = 0.0;
        for (int j = 0; j < n_rad; ++j) {
            const double rho = slice->radius * (j + 0.5) / n_rad;
            const double q = r2 - rho * rho;
            const double kern =
                omega * std::pow(q, 0.5 * p) *
                (0.25 * rho * rho / (delta * delta) + cp2 * q / (delta * delta));
            double usum = 0.0;
            for (int a = 0; a < n_ang; ++a) {
                const double th = 2.0 * kPi * a / n_ang;
                Vector x(2);
                x << slice->center[0] + rho * std::cos(th),
                     slice->center[1] + rho * std::sin(th);
                usum += u(x, t);
            }
            slice_sum += kern * rho * usum * (2.0 * kPi / n_ang) *
                         (slice->radius / n_rad);
        }
        total += slice_sum * (dmax / n_dt);
    }
    return total / spec.r();
}

SolutionField constant_field(double c) {
    SolutionField f;
    f.eval = [c](const Vector&, double) { return c; };
    f.label = "constant";
    f.harmonic = true;
    return f;
}

SolutionField quadratic_field(int n) {
    SolutionField f;
    f.eval = [n](const Vector& x, double t) { return x.squaredNorm() + 2.0 * n * t; };
    f.label = "|x|^2 + 2Nt";
    f.harmonic = true;
    return f;
}

} // namespace

TEST_CASE("unit ball volumes") {
    CHECK(unit_ball_volume(1) == doctest::Approx(2.0));
    CHECK(unit_ball_volume(2) == doctest::Approx(kPi));
    CHECK(unit_ball_volume(3) == doctest::Approx(4.0 * kPi / 3.0));
    // omega_5 = pi^{5/2} / Gamma(7/2) = 8 pi^2 / 15
    CHECK(unit_ball_volume(5) == doctest::Approx(8.0 * kPi * kPi / 15.0).epsilon(1e-14));
}

TEST_CASE("onion slice geometry") {
    const DriftModel model = rotation_drift_2d();
    SUBCASE("center stays at the origin for z0 = 0") {
        const OnionSpec spec(group_identity(2), 1.0, 5, model);
        for (const double frac : {0.1, 0.5, 0.9}) {
            const auto slice = onion_slice(spec, frac * spec.delta_max());
            REQUIRE(slice.has_value());
            CHECK(slice->center.norm() == 0.0);
        }
    }
    SUBCASE("radius vanishes at the bottom and the slice empties past it") {
        const OnionSpec spec(group_identity(2), 2.0, 5, model);
        const auto nearly = onion_slice(spec, spec.delta_max() * (1.0 - 1e-9));
        REQUIRE(nearly.has_value());
        CHECK(nearly->radius <= 2e-4);
        CHECK_FALSE(onion_slice(spec, spec.delta_max() * 1.01).has_value());
    }
    SUBCASE("frozen mid-depth radius: r = (4 pi)^{7/2}, delta = 1/2") {
        const double r = std::pow(4.0 * kPi, 3.5);
        const OnionSpec spec(group_identity(2), r, 5, model);
        CHECK(spec.delta_max() == doctest::Approx(1.0).epsilon(1e-14));
        const auto slice = onion_slice(spec, 0.5);
        REQUIRE(slice.has_value());
        CHECK(slice->radius * slice->radius ==
              doctest::Approx(7.0 * std::log(2.0)).epsilon(1e-13));
    }
    SUBCASE("delta <= 0 rejected") {
        const OnionSpec spec(group_identity(2), 1.0, 5, model);
        CHECK_THROWS_AS((void)onion_slice(spec, 0.0), oukl::InvalidInput);
    }
}

TEST_CASE("onion membership") {
    const DriftModel model = rotation_drift_2d();
    const GroupPoint z0{Vector::Zero(2), 0.3};
    const OnionSpec spec(z0, 1.5, 5, model);

    SUBCASE("future points are outside") {
        CHECK_FALSE(onion_contains(spec, GroupPoint{Vector::Zero(2), z0.t}));
        CHECK_FALSE(onion_contains(spec, GroupPoint{Vector::Zero(2), z0.t + 1.0}));
    }
    SUBCASE("mid-depth axis point is inside, below delta_max everything is outside") {
        CHECK(onion_contains(spec, GroupPoint{z0.x, z0.t - spec.delta_max() / 2.0}));
        Rng rng(1, 0);
        for (int i = 0; i < 20; ++i) {
            const GroupPoint deep{5.0 * rng.in_ball(2), z0.t - spec.delta_max() * 1.0001};
            CHECK_FALSE(onion_contains(spec, deep));
        }
    }
    SUBCASE("slice consistency: membership == slice ball membership") {
        Rng rng(2, 0);
        for (int i = 0; i < 500; ++i) {
            const double delta = rng.uniform(1e-4, spec.delta_max() * 1.2);
            const GroupPoint zeta{3.0 * rng.in_ball(2), z0.t - delta};
            const auto slice = delta < spec.delta_max() ? onion_slice(spec, delta)
                                                        : std::nullopt;
            const bool in_ball =
                slice && (zeta.x - slice->center).norm() < slice->radius * (1.0 - 1e-12);
            const bool out_ball =
                !slice || (zeta.x - slice->center).norm() > slice->radius * (1.0 + 1e-12);
            if (in_ball) CHECK(onion_contains(spec, zeta));
            if (onion_contains(spec, zeta)) CHECK_FALSE(out_ball);
        }
    }
    SUBCASE("onion monotonicity in r") {
        const OnionSpec small(z0, 0.7, 5, model);
        const OnionSpec large(z0, 2.9, 5, model);
        Rng rng(3, 0);
        for (int i = 0; i < 300; ++i) {
            const double delta = rng.uniform(1e-4, small.delta_max());
            const GroupPoint zeta{2.0 * rng.in_ball(2), z0.t - delta};
            if (onion_contains(small, zeta)) CHECK(onion_contains(large, zeta));
        }
    }
}

TEST_CASE("kernel_W") {
    GroupPoint z{Vector::Zero(2), -1.0};
    CHECK(kernel_W(z) == 0.0);
    z.x << 2.0, 0.0;
    CHECK(kernel_W(z) == doctest::Approx(1.0));
    GroupPoint mirrored = z;
    mirrored.x = -z.x;
    CHECK(kernel_W(z) == kernel_W(mirrored));
    GroupPoint singular{Vector::Ones(2), 0.0};
    CHECK_THROWS_AS((void)kernel_W(singular), oukl::DomainError);
}

TEST_CASE("kernel_R") {
    const DriftModel model = rotation_drift_2d();
    const double r = 2.0;
    const int p = 5;

    SUBCASE("zero on the onion boundary") {
        const double dmax = std::pow(r, 2.0 / 7.0) / (4.0 * kPi);
        GroupPoint z{Vector::Zero(2), -dmax};
        CHECK(kernel_R(z, r, p, model) <= 1e-7);
    }
    SUBCASE("axis value matches the closed form") {
        const double delta = 0.01;
        GroupPoint z{Vector::Zero(2), -delta};
        const double expected2 =
            4.0 * delta * std::log(r / std::pow(4.0 * kPi * delta, 3.5));
        const double got = kernel_R(z, r, p, model);
        CHECK(got * got == doctest::Approx(expected2).epsilon(1e-12));
    }
    SUBCASE("depends on |x| only") {
        const double delta = 0.012;
        GroupPoint a{Vector(2), -delta}, b{Vector(2), -delta};
        a.x << 0.1, 0.0;
        b.x << 0.1 / std::sqrt(2.0), 0.1 / std::sqrt(2.0);
        CHECK(kernel_R(a, r, p, model) ==
              doctest::Approx(kernel_R(b, r, p, model)).epsilon(1e-13));
    }
    SUBCASE("outside the onion -> domain error") {
        GroupPoint late{Vector::Zero(2), 0.5};
        CHECK_THROWS_AS((void)kernel_R(late, r, p, model), oukl::DomainError);
        GroupPoint far{Vector(2), -0.01};
        far.x << 10.0, 0.0;
        CHECK_THROWS_AS((void)kernel_R(far, r, p, model), oukl::DomainError);
    }
}

TEST_CASE("weight kernel") {
    const DriftModel model = rotation_drift_2d();
    const double r = 1.0;
    const int p = 5;
    const double dmax = std::pow(r, 2.0 / 7.0) / (4.0 * kPi);

    SUBCASE("axis value: W term drops, R term remains") {
        const double delta = dmax / 2.0;
        GroupPoint z{Vector::Zero(2), -delta};
        const double radial = kernel_R(z, r, p, model);
        const double expected = unit_ball_volume(p) * std::pow(radial, p) *
                                (p / (4.0 * (p + 2.0))) * radial * radial /
                                (delta * delta);
        CHECK(weight_kernel(z, r, p, model) == doctest::Approx(expected).epsilon(1e-13));
    }
    SUBCASE("nonnegative over the onion") {
        Rng rng(4, 0);
        for (int i = 0; i < 2000; ++i) {
            const double delta = rng.uniform(1e-6, dmax * (1 - 1e-9));
            const double lg = std::log(r) - 3.5 * std::log(4.0 * kPi * delta);
            if (lg <= 0) continue;
            const double radius = std::sqrt(4.0 * delta * lg);
            GroupPoint z{radius * (1.0 - 1e-12) * std::pow(rng.uniform01(), 0.5) *
                             rng.on_sphere(2),
                         -delta};
            CHECK(weight_kernel(z, r, p, model) >= 0.0);
        }
    }
}

TEST_CASE("mean value: normalization identity at default resolution") {
    // the acceptance bound is 2e-3; the grid scheme lands many orders below
    for (const int n_dim : {2, 3}) {
        const DriftModel model =
            n_dim == 2 ? rotation_drift_2d() : antisymmetric_drift_3d(0.3, -0.7, 1.1);
        const QuadratureConfig cfg = default_quadrature(n_dim);
        for (const int p : {5, 6}) {
            for (const double r : {0.1, 1.0, 10.0}) {
                const OnionSpec spec(group_identity(n_dim), r, p, model);
                const NormalizationReport rep = onion_volume_weight_check(spec, cfg);
                CAPTURE(n_dim);
                CAPTURE(p);
                CAPTURE(r);
                CHECK(rep.deviation <= 2e-3);
                CHECK(rep.deviation <= std::max(rep.error_estimate, 1e-9));
            }
        }
    }
}

TEST_CASE("mean value: one-dimensional normalization") {
    const OnionSpec spec(group_identity(1), 1.0, 5, zero_drift(1));
    const NormalizationReport rep =
        onion_volume_weight_check(spec, default_quadrature(1));
    CHECK(rep.deviation <= 1e-9);
}

TEST_CASE("mean value: Monte Carlo normalization within its own 3 sigma") {
    const DriftModel model = antisymmetric_drift_3d(0.3, -0.7, 1.1);
    const OnionSpec spec(group_identity(3), 1.0, 5, model);
    QuadratureConfig cfg{QuadScheme::MonteCarlo, 128, 8192, 99}; // ~1e6 samples
    const NormalizationReport rep = onion_volume_weight_check(spec, cfg);
    CHECK(rep.deviation <= rep.error_estimate);
    CHECK(rep.error_estimate <= 2e-2);
}

TEST_CASE("mean value: Monte Carlo result is independent of the worker count") {
    const DriftModel model = rotation_drift_2d();
    const OnionSpec spec(group_identity(2), 1.0, 5, model);
    QuadratureConfig cfg{QuadScheme::MonteCarlo, 32, 512, 4242};
    SolutionField u;
    u.eval = [](const Vector& x, double t) { return x.squaredNorm() + 4.0 * t; };
    setenv("OUKL_THREADS", "1", 1);
    const double serial = mean_value(u, spec, cfg).value;
    setenv("OUKL_THREADS", "2", 1);
    const double dual = mean_value(u, spec, cfg).value;
    unsetenv("OUKL_THREADS");
    CHECK(serial == dual);
}

TEST_CASE("mean value: constants reproduce exactly") {
    const DriftModel model = rotation_drift_2d();
    const OnionSpec spec(group_identity(2), 1.0, 5, model);
    const MeanValueResult mv = mean_value(constant_field(3.5), spec,
                                          default_quadrature(2));
    CHECK(std::abs(mv.value - 3.5) <= 1e-8);
    CHECK(mv.field_scale == doctest::Approx(3.5));
}

TEST_CASE("mean value: caloric quadratic vanishes at the origin and matches the oracle") {
    const DriftModel model = rotation_drift_2d();
    const OnionSpec spec(group_identity(2), 1.0, 5, model);
    const SolutionField u = quadratic_field(2);
    const MeanValueResult mv = mean_value(u, spec, default_quadrature(2));
    CHECK(std::abs(mv.value) <= 2e-3 * mv.field_scale);

    const double oracle = mv_oracle_2d(u, spec);
    CHECK(std::abs(mv.value - oracle) <= 2e-3 * std::max(1.0, mv.field_scale));
}

TEST_CASE("mean value: exactness across the harmonic corpus") {
    struct Case {
        int n_dim;
        FamilyKind kind;
    };
    const std::vector<Case> cases = {
        {2, FamilyKind::Constants},
        {2, FamilyKind::QuadraticHeat},
        {2, FamilyKind::FundamentalMixtures},
        {3, FamilyKind::Exponential},
    };
    Rng rng(21, 0);
    for (const auto& c : cases) {
        const DriftModel model =
            c.n_dim == 2 ? rotation_drift_2d() : antisymmetric_drift_3d(0.4, -0.2, 0.9);
        const HarmonicFamily family = test_family(model, c.kind, -20.0, 7);
        const QuadratureConfig cfg = default_quadrature(c.n_dim);
        for (const auto& member : family.members) {
            for (int trial = 0; trial < 4; ++trial) {
                GroupPoint z0{2.0 * rng.in_ball(c.n_dim), rng.uniform(-1.0, 1.0)};
                const double r = std::exp(rng.uniform(std::log(0.3), std::log(3.0)));
                const OnionSpec spec(z0, r, 5, model);
                const MeanValueResult mv = mean_value(member.field, spec, cfg);
                const double expected = member.field(z0.x, z0.t);
                const double scale =
                    std::max({mv.field_scale, std::abs(expected), 1e-30});
                CAPTURE(family.label);
                CHECK(std::abs(mv.value - expected) <=
                      std::max(2e-3 * scale, mv.error_estimate));
            }
        }
    }
}

TEST_CASE("mean value: left-invariance") {
    const DriftModel model = rotation_drift_2d(0.7);
    const QuadratureConfig cfg = default_quadrature(2);
    Rng rng(31, 0);
    const SolutionField u = quadratic_field(2);
    for (int trial = 0; trial < 3; ++trial) {
        const GroupPoint w{1.5 * rng.in_ball(2), rng.uniform(-1.0, 1.0)};
        SolutionField moved;
        moved.eval = [&model, w, &u](const Vector& x, double t) {
            const GroupPoint z = compose(w, GroupPoint{x, t}, model);
            return u(z.x, z.t);
        };
        const OnionSpec at_origin(group_identity(2), 1.3, 5, model);
        const OnionSpec at_w(w, 1.3, 5, model);
        const double lhs = mean_value(moved, at_origin, cfg).value;
        const double rhs = mean_value(u, at_w, cfg).value;
        CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(rhs)));
    }
}

TEST_CASE("mean value: domain handling") {
    const DriftModel model = rotation_drift_2d();
    SolutionField restricted = constant_field(1.0);
    restricted.domain_floor = -0.001;
    const OnionSpec spec(group_identity(2), 1.0, 5, model); // reaches delta_max ~ 0.08
    CHECK_THROWS_AS((void)mean_value(restricted, spec, default_quadrature(2)),
                    oukl::DomainError);

    QuadratureConfig bad = default_quadrature(2);
    bad.n_slices = 0;
    CHECK_THROWS_AS((void)mean_value(constant_field(1.0), spec, bad), oukl::InvalidInput);
}

TEST_CASE("OnionSpec validation") {
    const DriftModel model = rotation_drift_2d();
    CHECK_THROWS_AS((void)OnionSpec(group_identity(2), -1.0, 5, model),
                    oukl::InvalidInput);
    CHECK_THROWS_AS((void)OnionSpec(group_identity(2), 1.0, 0, model),
                    oukl::InvalidInput);
    Matrix shear(2, 2);
    shear << 0.0, 1.0, 0.0, 0.0;
    CHECK_THROWS_AS((void)OnionSpec(group_identity(2), 1.0, 5, DriftModel(shear)),
                    oukl::InvalidInput);
}
