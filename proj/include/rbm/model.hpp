#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rbm/hydro.hpp"
#include "rbm/measure.hpp"
#include "rbm/relax.hpp"
#include "rbm/scenario.hpp"
#include "rbm/sensitivity.hpp"

namespace rbm {

/// Forward prediction for one scenario: solvent -> rates -> bath fields -> T1.
struct T1Report {
    double t1 = 0.0;
    double rate_total = 0.0;
    double rate_bulk = 0.0;
    double rate_surface = 0.0;
    double rate_gd = 0.0;
    double b_perp_sq_surface = 0.0;
    double b_perp_sq_gd = 0.0;
    RateBreakdown gd_rates;
    double viscosity = 0.0; // Pa s
    double f_r = 0.0;       // 1 when microviscosity is disabled
    double a_s = 0.0;       // m
    double x_water = 0.0;
    double diameter = 0.0;  // m
    double density = 0.0;   // 1/m^3
};

RateBreakdown gd_rates(const Scenario& s, double density);
std::vector<NoiseSource> noise_sources(const Scenario& s);
T1Report predict_t1(const Scenario& s);

enum class SweepAxis { GdDensity, WaterFraction, Diameter };

SweepAxis parse_axis(const std::string& name);
std::string axis_name(SweepAxis axis);

/// One forward prediction per grid value along `axis`. The whole grid is
/// checked against the physical range before anything is computed.
std::vector<T1Report> sweep(const Scenario& s, SweepAxis axis, std::span<const double> grid);

void write_sweep(std::ostream& out, SweepAxis axis, std::span<const double> grid,
                 std::span<const T1Report> rows);

/// {B_perp^2, R_total} of the molecular bath as a function of density.
DensityModel density_model(const Scenario& s);

/// Sensitivity curve on `grid`, or the default 3-decade grid around the
/// scenario's molecular density when `grid` is empty.
SensitivityCurve scenario_sensitivity(const Scenario& s, std::span<const double> grid = {});

/// Gaussian jitter of density and diameter with the configured relative
/// spreads (redrawn until positive), followed by a forward T1 prediction.
SpotSampler spot_sampler(const Scenario& s);

struct EnsembleRun {
    double nominal_t1 = 0.0;
    MeasurementPlan plan;
    std::vector<SpotRecord> spots;
};

EnsembleRun run_ensemble(const Scenario& s, std::size_t n_spots, std::uint64_t seed);

/// Converged-fit T1 estimates of an ensemble.
std::vector<double> fitted_t1(const EnsembleRun& run);

// Oracles --------------------------------------------------------------------

struct OracleReport {
    std::string name;
    bool passed = false;
    std::vector<std::string> lines;
};

/// Closed-form surface and volume B_perp^2 against the dipolar Monte Carlo
/// (centred sensor), pass when both agree within 3 standard errors.
OracleReport bath_oracle(const Scenario& s, std::uint64_t samples, std::uint64_t seed);

/// Lorentzian normalisation by adaptive quadrature, relative error < 1e-6.
OracleReport quadrature_oracle(const Scenario& s);

struct RatioScan {
    std::vector<double> rates;
    std::vector<double> ratios; // delta_r_min / delta_r_oracle
    double median = 0.0;
    double max_rel_deviation = 0.0;
    double max_halving_change = 0.0; // oracle change when the FD step is halved
};

/// delta_r_min / delta_r_oracle over R in [0.1, 100] omega0 (log grid)
/// excluding |R - omega0| < 0.2 omega0.
RatioScan sensitivity_ratio_scan(const Scenario& s, std::size_t points = 121);
OracleReport sensitivity_oracle(const Scenario& s);

} // namespace rbm
