#pragma once

#include "rbm/scenario.hpp"

namespace rbm {

/// Reference values the shipped constants are tuned to reproduce.
struct CalibrationTargets {
    double acetone_rbm_rate = 14.2e9;       // 1/s, Gd-DOTA in pure acetone
    double optimal_total_rate = 60.2e9;     // 1/s, R_total at the sensitivity optimum
    double optimal_delta_r = 6.9e9;         // 1/s, best sensitivity at sensitivity_diameter
    double sensitivity_diameter = 20e-9;    // m
    double sensitivity_x_water = 1.0;
    double bare_t1 = 130e-6;                // s, no Gd
    double bare_diameter = 25e-9;           // m
};

struct Calibration {
    double molecule_radius = 0.0; // m
    double r_vib = 0.0;           // 1/s
    double kappa_dip = 0.0;       // m^3/s
    double optimal_density = 0.0; // 1/m^3 at sensitivity_diameter
    double surface_density = 0.0; // 1/m^2
    double surface_tau_c = 0.0;   // s
    double background_rate = 0.0; // 1/s, R_vib + R_trans + R_rot at the optimum
};

/// Radius a at which the rotational rate in pure co-solvent (x_water = 0)
/// equals `target_rate`.
double calibrate_molecule_radius(const Scenario& base, double target_rate);

/// Density-independent rate R0 for which delta_r_min along
/// R = kappa n + R0 is stationary at R = optimal_rate (kappa cancels).
double background_rate_for_optimum(double optimal_rate, double omega0);

/// Runs the full chain: radius, vibrational rate, dipolar coefficient,
/// surface density. Surface spins are given tau_c = 1/omega0, the value that
/// needs the smallest surface density for a given bare T1.
Calibration calibrate(const Scenario& base, const CalibrationTargets& targets = {});

/// `base` with every calibrated constant applied.
Scenario apply(const Scenario& base, const Calibration& c);

} // namespace rbm
