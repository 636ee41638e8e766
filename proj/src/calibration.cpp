#include "rbm/calibration.hpp"

#include <boost/math/tools/roots.hpp>
#include <cmath>

#include "rbm/error.hpp"
#include "rbm/model.hpp"

namespace rbm {

double calibrate_molecule_radius(const Scenario& base, double target_rate) {
    const SolventMixture mix = base.mixture();
    auto mismatch = [&](double a) {
        HydroParams p{a, mix.effective_radius(0.0), mix.viscosity(0.0), base.temperature};
        const auto mode = base.solvent.microviscosity ? Microviscosity::Included : Microviscosity::Neglected;
        return std::log(rbm_rate(p, mode) / target_rate);
    };
    boost::uintmax_t iters = 200;
    const auto tol = boost::math::tools::eps_tolerance<double>(50);
    const auto [lo, hi] = boost::math::tools::toms748_solve(mismatch, 1e-11, 1e-8, tol, iters);
    return 0.5 * (lo + hi);
}

double background_rate_for_optimum(double optimal_rate, double omega0) {
    // d/dR log(dR_min) with n = (R - R0)/kappa:
    //   1/2 [1/R - 1/(R - R0)] + 3R/(R^2 + w^2) - 2R/(R^2 - w^2) = 0
    const double r = optimal_rate, r2 = r * r, w2 = omega0 * omega0;
    const double spectral = 3.0 * r / (r2 + w2) - 2.0 * r / (r2 - w2);
    const double inv_excess = 1.0 / r + 2.0 * spectral;
    if (!(spectral > 0.0) || !(inv_excess > 0.0))
        throw NumericalError("no positive background rate puts the optimum at the requested R");
    return r - 1.0 / inv_excess;
}

Calibration calibrate(const Scenario& base, const CalibrationTargets& t) {
    Calibration c;
    Scenario s = base;
    c.molecule_radius = calibrate_molecule_radius(s, t.acetone_rbm_rate);
    s.molecule_radius = c.molecule_radius;

    // Sensitivity reference configuration.
    Scenario ref = s;
    ref.particle.diameter = t.sensitivity_diameter;
    ref.particle.sensor_offset = 0.0;
    ref.solvent.x_water = t.sensitivity_x_water;
    ref.r_vib = 0.0;
    ref.kappa_dip = 0.0;
    const RateBreakdown motion = gd_rates(ref, 0.0); // R_trans + R_rot only
    c.background_rate = background_rate_for_optimum(t.optimal_total_rate, s.omega0);
    c.r_vib = c.background_rate - motion.r_trans - motion.r_rot;
    if (!(c.r_vib > 0.0)) throw NumericalError("calibrated vibrational rate is not positive");

    // delta_r_min scales as sqrt(kappa) at fixed R_total: solve with kappa = 1.
    const double excess = t.optimal_total_rate - c.background_rate;
    VolumeBath bath = s.gd;
    bath.number_density = excess; // density for kappa = 1
    ParticleGeometry g{t.sensitivity_diameter, 0.0};
    SensitivityInputs inp = s.sensitivity_inputs();
    inp.b_perp_sq = b_perp_sq_volume(g, bath);
    inp.r_total = t.optimal_total_rate;
    const double trial = delta_r_min(inp);
    c.kappa_dip = std::pow(t.optimal_delta_r / trial, 2);
    c.optimal_density = excess / c.kappa_dip;

    c.surface_tau_c = 1.0 / s.omega0;
    c.surface_density = calibrate_surface_density(t.bare_t1, ParticleGeometry{t.bare_diameter, 0.0}, s.t1_bulk,
                                                  AngularFrequency{s.omega0}, c.surface_tau_c, s.surface);
    return c;
}

Scenario apply(const Scenario& base, const Calibration& c) {
    Scenario s = base;
    s.molecule_radius = c.molecule_radius;
    s.r_vib = c.r_vib;
    s.kappa_dip = c.kappa_dip;
    s.gd.number_density = c.optimal_density;
    s.surface.areal_density = c.surface_density;
    s.surface_tau_c = c.surface_tau_c;
    return s;
}

} // namespace rbm
