#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rbm/units.hpp"

namespace rbm {

struct SensitivityInputs {
    double contrast = 0.2;
    double photon_rate = 1e5;         // counts/s
    double detection_window = 500e-9; // s
    double acquisition_time = 10.0;   // s
    double gamma_e = constants::kGammaElectron;
    double b_perp_sq = 0.0; // T^2, molecular bath
    double r_total = 0.0;   // 1/s
    double omega0 = kNvOmega0.value;

    void validate() const;
};

/// Shot-noise-limited minimal detectable change of the total fluctuation rate
/// after acquiring for `acquisition_time`:
///
///   dR = 1/(C sqrt(D T_D T)) * sqrt(2 e R / (3 gamma^2 B^2)) * (R^2 + w0^2)^{3/2} / |R^2 - w0^2|
///
/// Throws SingularityError at R == omega0 where dT1/dR vanishes.
double delta_r_min(const SensitivityInputs& inp);

struct OracleReadout {
    double delta_r = 0.0;    // 1/s
    double dark_time = 0.0;  // s, optimal single-point readout time
    double slope = 0.0;      // d(signal)/dR at that time
};

/// Independent route to delta_r_min: propagates Poisson shot noise of a
/// single-dark-time readout through a finite-difference derivative of the
/// signal model with respect to R, then minimises over the dark time.
/// Only the molecular bath relaxes the sensor in this model, as in the
/// closed form. `perturbation` is the absolute finite-difference step in R.
OracleReadout delta_r_oracle(const SensitivityInputs& inp, double perturbation);

struct SensitivityPoint {
    double density = 0.0;     // 1/m^3
    double r_total = 0.0;     // 1/s
    double b_perp_sq = 0.0;   // T^2
    double delta_r_min = 0.0; // 1/s
};

struct SensitivityCurve {
    std::vector<SensitivityPoint> points;
    std::size_t argmin = 0;            // index into points
    SensitivityPoint refined;          // Brent-refined minimum between the argmin neighbours
    bool boundary_warning = false;     // argmin sits on the first or last grid point
    std::vector<std::string> notices;  // skipped points
};

/// Bath and rate model at a given molecular number density:
/// returns {B_perp^2 (T^2), R_total (1/s)}.
struct BathAtDensity {
    double b_perp_sq = 0.0;
    double r_total = 0.0;
};
using DensityModel = std::function<BathAtDensity(double density)>;

/// Evaluates delta_r_min along `density_grid` (ascending, >= 2 decades).
SensitivityCurve optimize_density(const DensityModel& model, std::span<const double> density_grid,
                                  const SensitivityInputs& fixed);

/// `per_decade` log-spaced points over `decades` decades centred on `centre`.
std::vector<double> log_grid(double centre, double decades = 3.0, int per_decade = 40);

void write_sensitivity_curve(std::ostream& out, const SensitivityCurve& curve);
void write_sensitivity_curve(const std::filesystem::path& path, const SensitivityCurve& curve);

} // namespace rbm
