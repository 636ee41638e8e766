#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "rbm/units.hpp"

namespace rbm {

struct ParticleGeometry {
    double diameter = 25e-9;        // m
    double sensor_offset = 0.0;     // m, displacement of the sensor from the centre

    double radius() const { return 0.5 * diameter; }
    void validate() const;
};

/// Paramagnetic spins on the particle surface.
struct SurfaceBath {
    double areal_density = 0.0; // 1/m^2
    double spin = 0.5;
    double gamma = constants::kGammaElectron;

    void validate() const;
};

/// Paramagnetic molecules dissolved outside the particle.
struct VolumeBath {
    double number_density = 0.0; // 1/m^3
    double spin = 3.5;
    double gamma = constants::kGammaElectron;
    double standoff = 0.0; // m, closest approach beyond the particle radius

    void validate() const;
};

using BathDescription = std::variant<SurfaceBath, VolumeBath>;

/// Orientation-averaged transverse factor: the isotropic single-dipole field
/// variance carries 2/r^6, and a randomly oriented sensor axis keeps 2/3 of it.
inline constexpr double kTransverseGeometricFactor = 2.0 * 2.0 / 3.0;

/// (mu0/4pi)^2 gamma^2 hbar^2 S(S+1), in T^2 m^6.
double dipolar_prefactor(double gamma, double spin);

/// A_s sigma / r0^4 for a sensor at the particle centre.
double b_perp_sq_surface(const ParticleGeometry& g, const SurfaceBath& bath);
/// A_v n / (r0 + standoff)^3 for a sensor at the particle centre.
double b_perp_sq_volume(const ParticleGeometry& g, const VolumeBath& bath);

struct MonteCarloOptions {
    std::uint64_t samples = 1'000'000;
    std::uint64_t seed = 1;
    double cutoff_factor = 20.0; // outer radius of the sampled shell, in units of r0
};

struct MonteCarloResult {
    double mean = 0.0;   // T^2
    double std_error = 0.0; // T^2
    std::uint64_t samples = 0;
    std::uint64_t seed = 0;
    double tail_correction = 0.0; // T^2, analytic r^-6 tail beyond the cutoff (included in mean)
    bool tail_warning = false;    // tail_correction exceeds stderr
};

/// Dipolar-sum estimate of the transverse field variance at the sensor.
///
/// Spin positions are uniform on the particle surface or uniform in the
/// exterior shell [r0 + standoff, cutoff_factor * r0]; spin directions and
/// the sensor axis are isotropic. Work is split into a fixed number of chunks
/// with derived seeds, so the output depends only on (samples, seed).
MonteCarloResult b_perp_mc(const ParticleGeometry& g, const BathDescription& bath,
                           const MonteCarloOptions& options);

/// Inverts the relaxation model for the surface density that yields
/// `t1_measured` with the surface bath as the only extra source.
double calibrate_surface_density(double t1_measured, const ParticleGeometry& g, double t1_bulk,
                                 AngularFrequency omega0, double tau_c_surface,
                                 const SurfaceBath& bath_template = {});

struct DensityPoint {
    double n_prepared = 0.0; // 1/m^3
    double t1 = 0.0;         // s
};

struct DensityScaleFit {
    double scale = 1.0;
    double scale_stderr = 0.0;
    double residual_sum_sq = 0.0; // (1/s)^2
    int iterations = 0;
};

/// Fits one multiplicative factor s so that rate_model(s * n_prepared)
/// matches 1/t1 in least squares. rate_model maps a local Gd number density
/// to the predicted total relaxation rate.
DensityScaleFit effective_gd_density_fit(std::span<const DensityPoint> points,
                                         const std::function<double(double)>& rate_model);

} // namespace rbm
