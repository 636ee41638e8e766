#pragma once

#include <numbers>

namespace rbm {

// Physical constants (CODATA 2018, SI).
namespace constants {
inline constexpr double kBoltzmann = 1.380649e-23;      // J/K
inline constexpr double kHbar = 1.054571817e-34;        // J s
inline constexpr double kMu0Over4Pi = 1.00000000055e-7; // T m / A
inline constexpr double kGammaElectron = 1.760859e11;   // rad/(s T)
inline constexpr double kNvSplittingHz = 2.87e9;        // zero-field D
} // namespace constants

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Angular frequency in rad/s.
///
/// Fluctuation rates R = 1/tau_c are plain 1/s values and enter the
/// Lorentzian on the same footing as omega (omega * tau_c is dimensionless),
/// so rates and angular frequencies share this representation.
struct AngularFrequency {
    double value = 0.0;

    constexpr AngularFrequency() = default;
    constexpr explicit AngularFrequency(double rad_per_s) : value(rad_per_s) {}

    static constexpr AngularFrequency from_hz(double hz) { return AngularFrequency{kTwoPi * hz}; }
    constexpr double hz() const { return value / kTwoPi; }

    friend constexpr auto operator<=>(AngularFrequency, AngularFrequency) = default;
};

/// NV zero-field splitting, omega0 = 2 pi * 2.87 GHz.
inline constexpr AngularFrequency kNvOmega0 = AngularFrequency::from_hz(constants::kNvSplittingHz);

/// Reporting convention for fluctuation rates: "GHz" means 1e9 s^-1, with no
/// 2 pi. The splitting omega0 is the only quantity quoted as (2 pi) x GHz.
/// All GHz conversions in the code base go through these two functions.
constexpr double rate_to_ghz(double rate_per_s) { return rate_per_s * 1e-9; }
constexpr double ghz_to_rate(double ghz) { return ghz * 1e9; }

inline constexpr double kNanometre = 1e-9;

} // namespace rbm
