#pragma once

#include <span>
#include <string>
#include <vector>

#include "rbm/units.hpp"

namespace rbm {

/// Accepted range for correlation times, in seconds.
inline constexpr double kMinCorrelationTime = 1e-15;
inline constexpr double kMaxCorrelationTime = 1e3;

/// One Lorentzian noise component seen by the sensor.
struct NoiseSource {
    std::string label;
    double gamma = constants::kGammaElectron; // rad/(s T)
    double b_perp_sq = 0.0;                   // T^2, mean-square transverse field
    double tau_c = 1e-9;                      // s, 1 / (total fluctuation rate)

    /// Throws ParameterError unless b_perp_sq >= 0, gamma != 0 and tau_c is
    /// within [kMinCorrelationTime, kMaxCorrelationTime].
    void validate() const;

    static NoiseSource from_rate(std::string label, double gamma, double b_perp_sq,
                                 double fluctuation_rate);
};

struct SourceRate {
    std::string label;
    double rate = 0.0; // 1/s
};

struct RelaxationResult {
    double t1 = 0.0;         // s
    double rate_total = 0.0; // 1/s, equals 1/t1
    double rate_bulk = 0.0;  // 1/s, 1/T1_bulk
    std::vector<SourceRate> per_source_rates;
};

/// One-sided-convention spectral density S(w) = <B_perp^2> 2 tau_c / (1 + w^2 tau_c^2),
/// normalised so that the integral of S over dw / (2 pi) equals b_perp_sq.
double lorentzian_psd(const NoiseSource& source, AngularFrequency omega);

/// Relaxation rate 3 gamma^2 <B_perp^2> tau_c / (1 + omega0^2 tau_c^2).
double rate_contribution(const NoiseSource& source, AngularFrequency omega0);

RelaxationResult t1_total(std::span<const NoiseSource> sources, double t1_bulk,
                          AngularFrequency omega0);

struct NarrowingPoint {
    double rate = 0.0;         // 1/s
    double contribution = 0.0; // 1/s
};

/// Evaluates the template's relaxation contribution with tau_c = 1/R for
/// each R in `rate_grid` (ascending, positive). The curve peaks at R = omega0.
std::vector<NarrowingPoint> motional_narrowing_curve(const NoiseSource& source_template,
                                                     AngularFrequency omega0,
                                                     std::span<const double> rate_grid);

} // namespace rbm
