#pragma once

#include <cstdint>
#include <optional>

#include "oukl/fields.hpp"
#include "oukl/group.hpp"

namespace oukl {

enum class QuadScheme { TensorGrid, MonteCarlo };

/// Quadrature resolution. For the tensor grid, n_per_slice is the radial
/// node count; the angular counts derive from it (2n angles for N=2,
/// n x 2n Gauss-Legendre-by-azimuth for N=3). For Monte Carlo it is the
/// number of uniform ball samples per time slice. Per-slice RNG streams are
/// derived from (seed, slice index), so results do not depend on worker
/// count.
struct QuadratureConfig {
    QuadScheme scheme = QuadScheme::TensorGrid;
    int n_slices = 128;
    int n_per_slice = 32;
    std::uint64_t seed = 1;
};

/// Defaults tuned so the normalization identity holds to ~1e-4 in a fraction
/// of a second for N = 2, 3.
QuadratureConfig default_quadrature(int n_dim);

/// The level set Omega_r^(p)(z0) = { z : phi_p(z0, z) > 1/r }.
class OnionSpec {
public:
    OnionSpec(GroupPoint center, double r, int p, DriftModel model);

    const GroupPoint& center() const { return center_; }
    double r() const { return r_; }
    int p() const { return p_; }
    const DriftModel& model() const { return model_; }
    int dim() const { return model_.dim(); }

    /// Time depth of the set: slices exist for 0 < delta < delta_max,
    /// delta_max = r^{2/(N+p)} / (4 pi).
    double delta_max() const { return delta_max_; }

private:
    GroupPoint center_;
    double r_;
    int p_;
    DriftModel model_;
    double delta_max_;
};

/// One time slice of an onion: the exact Euclidean ball
///   { x : |x - center| < radius }  at  t = t0 - delta,
/// radius^2 = 4 delta log( r / (4 pi delta)^{(N+p)/2} ), center = E(-delta) x0.
struct OnionSlice {
    double delta;
    Vector center;
    double radius;
};

/// Empty (nullopt) when delta >= delta_max. Throws on delta <= 0.
std::optional<OnionSlice> onion_slice(const OnionSpec& spec, double delta);

bool onion_contains(const OnionSpec& spec, const GroupPoint& zeta);

/// W(x,t) = (|x|/t)^2 / 4. Throws DomainError at t = 0.
double kernel_W(const GroupPoint& z);

/// R_r(0,z) = sqrt(4(-t) log(r phi_p(0,z))). Domain: closure of the onion
/// centered at the origin (boundary gives 0); outside -> DomainError.
double kernel_R(const GroupPoint& z, double r, int p, const DriftModel& model);

/// W_r^(p)(z) = omega_p R_r^p(0,z) { W(z) + p/(4(p+2)) (R_r(0,z)/t)^2 }.
double weight_kernel(const GroupPoint& z, double r, int p, const DriftModel& model);

/// omega_p: Lebesgue measure of the unit ball in R^p.
double unit_ball_volume(int p);

struct MeanValueResult {
    double value = 0.0;
    /// Grid: Richardson estimate between n and 2n slices. MC: 3x standard error.
    double error_estimate = 0.0;
    /// max |u| over the quadrature nodes (the "scale" of u on the onion).
    double field_scale = 0.0;
};

/// Evaluates (1/r) int_{Omega_r^(p)(z0)} u(z) W_r^(p)(z0^{-1} o z) dz.
/// Throws DomainError when the onion does not fit u's domain.
MeanValueResult mean_value(const SolutionField& u, const OnionSpec& spec,
                           const QuadratureConfig& cfg);

struct NormalizationReport {
    double value = 0.0;
    double deviation = 0.0; ///< |value - 1|
    double error_estimate = 0.0;
};

/// The normalization identity: mean_value of u == 1 must give 1.
NormalizationReport onion_volume_weight_check(const OnionSpec& spec,
                                              const QuadratureConfig& cfg);

} // namespace oukl
