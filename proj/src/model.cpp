#include "rbm/model.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "rbm/error.hpp"

namespace rbm {

using detail::require;

RateBreakdown gd_rates(const Scenario& s, double density) {
    const SolventMixture mix = s.mixture();
    HydroParams hp;
    hp.a = s.molecule_radius;
    hp.a_s = mix.effective_radius(s.solvent.x_water);
    hp.eta = mix.viscosity(s.solvent.x_water);
    hp.temperature = s.temperature;
    const auto mode = s.solvent.microviscosity ? Microviscosity::Included : Microviscosity::Neglected;
    return total_rate(s.kappa_dip * density, s.r_vib, translational_rate(hp, s.translational_length()),
                      rbm_rate(hp, mode));
}

namespace {

ParticleGeometry centred(const ParticleGeometry& g) {
    ParticleGeometry c = g;
    c.sensor_offset = 0.0;
    return c;
}

double surface_field(const Scenario& s) {
    if (s.particle.sensor_offset == 0.0) return b_perp_sq_surface(s.particle, s.surface);
    return b_perp_mc(s.particle, s.surface, {s.mc_samples, derive_seed(s.seed, 101), 20.0}).mean;
}

double gd_field(const Scenario& s, double density) {
    VolumeBath bath = s.gd;
    bath.number_density = density;
    if (s.particle.sensor_offset == 0.0) return b_perp_sq_volume(s.particle, bath);
    return b_perp_mc(s.particle, bath, {s.mc_samples, derive_seed(s.seed, 102), 20.0}).mean;
}

} // namespace

std::vector<NoiseSource> noise_sources(const Scenario& s) {
    const RateBreakdown rates = gd_rates(s, s.gd.number_density);
    if (!(rates.r_total > 0.0)) throw NumericalError("Gd fluctuation rate is zero; set rates.vibrational_per_s");
    std::vector<NoiseSource> out;
    out.push_back({"surface", s.surface.gamma, surface_field(s), s.surface_tau_c});
    out.push_back({"gd", s.gd.gamma, gd_field(s, s.gd.number_density), 1.0 / rates.r_total});
    return out;
}

T1Report predict_t1(const Scenario& s) {
    s.validate();
    const auto sources = noise_sources(s);
    const RelaxationResult rr = t1_total(sources, s.t1_bulk, AngularFrequency{s.omega0});
    const SolventMixture mix = s.mixture();

    T1Report r;
    r.t1 = rr.t1;
    r.rate_total = rr.rate_total;
    r.rate_bulk = rr.rate_bulk;
    r.rate_surface = rr.per_source_rates[0].rate;
    r.rate_gd = rr.per_source_rates[1].rate;
    r.b_perp_sq_surface = sources[0].b_perp_sq;
    r.b_perp_sq_gd = sources[1].b_perp_sq;
    r.gd_rates = gd_rates(s, s.gd.number_density);
    r.viscosity = mix.viscosity(s.solvent.x_water);
    r.a_s = mix.effective_radius(s.solvent.x_water);
    r.f_r = s.solvent.microviscosity ? microviscosity_factor(s.molecule_radius, r.a_s) : 1.0;
    r.x_water = s.solvent.x_water;
    r.diameter = s.particle.diameter;
    r.density = s.gd.number_density;
    return r;
}

SweepAxis parse_axis(const std::string& name) {
    if (name == "gd_density") return SweepAxis::GdDensity;
    if (name == "water_fraction") return SweepAxis::WaterFraction;
    if (name == "diameter") return SweepAxis::Diameter;
    throw ParameterError("unknown sweep axis '" + name + "' (gd_density | water_fraction | diameter)");
}

std::string axis_name(SweepAxis axis) {
    switch (axis) {
    case SweepAxis::GdDensity: return "gd_density";
    case SweepAxis::WaterFraction: return "water_fraction";
    case SweepAxis::Diameter: return "diameter";
    }
    return "?";
}

std::vector<T1Report> sweep(const Scenario& s, SweepAxis axis, std::span<const double> grid) {
    require(!grid.empty(), "sweep grid is empty");
    require(std::is_sorted(grid.begin(), grid.end()), "sweep grid must be ascending");
    for (double v : grid) {
        require(std::isfinite(v), "sweep grid values must be finite");
        switch (axis) {
        case SweepAxis::GdDensity: require(v >= 0.0, "Gd density grid must be >= 0"); break;
        case SweepAxis::WaterFraction: require(v >= 0.0 && v <= 1.0, "water fraction grid must lie in [0, 1]"); break;
        case SweepAxis::Diameter:
            require(v > 2.0 * std::abs(s.particle.sensor_offset), "diameter grid must exceed twice the sensor offset");
            break;
        }
    }
    std::vector<T1Report> rows;
    rows.reserve(grid.size());
    for (double v : grid) {
        Scenario point = s;
        switch (axis) {
        case SweepAxis::GdDensity: point.gd.number_density = v; break;
        case SweepAxis::WaterFraction: point.solvent.x_water = v; break;
        case SweepAxis::Diameter: point.particle.diameter = v; break;
        }
        rows.push_back(predict_t1(point));
    }
    return rows;
}

void write_sweep(std::ostream& out, SweepAxis axis, std::span<const double> grid, std::span<const T1Report> rows) {
    const char* unit = axis == SweepAxis::GdDensity ? "_per_m3" : axis == SweepAxis::Diameter ? "_m" : "";
    out << axis_name(axis) << unit
        << ",viscosity_Pa_s,f_r,a_s_m,r_dip_per_s,r_vib_per_s,r_trans_per_s,r_rot_per_s,r_total_per_s,"
           "b_perp_sq_surface_T2,b_perp_sq_gd_T2,t1_s\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const double fields[] = {grid[i], r.viscosity, r.f_r, r.a_s, r.gd_rates.r_dip, r.gd_rates.r_vib,
                                 r.gd_rates.r_trans, r.gd_rates.r_rot, r.gd_rates.r_total,
                                 r.b_perp_sq_surface, r.b_perp_sq_gd, r.t1};
        for (std::size_t k = 0; k < std::size(fields); ++k) out << (k ? "," : "") << format_double(fields[k]);
        out << '\n';
    }
}

DensityModel density_model(const Scenario& s) {
    s.validate();
    return [s, geometry = centred(s.particle)](double n) {
        VolumeBath bath = s.gd;
        bath.number_density = n;
        return BathAtDensity{b_perp_sq_volume(geometry, bath), gd_rates(s, n).r_total};
    };
}

SensitivityCurve scenario_sensitivity(const Scenario& s, std::span<const double> grid) {
    std::vector<double> owned;
    if (grid.empty()) {
        require(s.gd.number_density > 0.0, "default sensitivity grid needs a nonzero gd_bath.density_per_m3");
        owned = log_grid(s.gd.number_density);
        grid = owned;
    }
    return optimize_density(density_model(s), grid, s.sensitivity_inputs());
}

SpotSampler spot_sampler(const Scenario& s) {
    s.validate();
    return [s](Engine& rng) {
        std::normal_distribution<double> unit(0.0, 1.0);
        auto jitter = [&](double nominal, double spread) {
            if (spread == 0.0 || nominal == 0.0) return nominal;
            for (;;) {
                const double v = nominal * (1.0 + spread * unit(rng));
                if (v > 0.0) return v;
            }
        };
        Scenario spot = s;
        spot.gd.number_density = jitter(s.gd.number_density, s.ensemble.density_rel_spread);
        for (;;) {
            spot.particle.diameter = jitter(s.particle.diameter, s.ensemble.diameter_rel_spread);
            if (spot.particle.diameter > 2.0 * std::abs(spot.particle.sensor_offset)) break;
        }
        return SpotTruth{predict_t1(spot).t1, spot.gd.number_density, spot.particle.diameter};
    };
}

EnsembleRun run_ensemble(const Scenario& s, std::size_t n_spots, std::uint64_t seed) {
    EnsembleRun run;
    run.nominal_t1 = predict_t1(s).t1;
    run.plan = s.plan(run.nominal_t1);
    run.spots = simulate_spot_ensemble(spot_sampler(s), n_spots, run.plan, seed);
    return run;
}

std::vector<double> fitted_t1(const EnsembleRun& run) {
    std::vector<double> out;
    for (const auto& spot : run.spots)
        if (spot.fit.converged) out.push_back(spot.fit.t1_hat);
    return out;
}

// ---------------------------------------------------------------------------

OracleReport bath_oracle(const Scenario& s, std::uint64_t samples, std::uint64_t seed) {
    s.validate();
    OracleReport rep{"bath_mc", true, {}};
    const ParticleGeometry g = centred(s.particle);
    auto check = [&](const char* label, double closed, const MonteCarloResult& mc) {
        const double z = mc.std_error > 0.0 ? (mc.mean - closed) / mc.std_error : (mc.mean == closed ? 0.0 : INFINITY);
        const bool ok = std::abs(z) <= 3.0;
        rep.passed = rep.passed && ok;
        rep.lines.push_back(std::string(label) + ": closed=" + format_double(closed) + " T^2, mc=" +
                            format_double(mc.mean) + " +/- " + format_double(mc.std_error) + " T^2, z=" +
                            format_double(z) + (mc.tail_warning ? " (tail warning)" : "") + (ok ? " PASS" : " FAIL"));
    };
    check("surface", b_perp_sq_surface(g, s.surface), b_perp_mc(g, s.surface, {samples, derive_seed(seed, 0), 20.0}));
    check("volume", b_perp_sq_volume(g, s.gd), b_perp_mc(g, s.gd, {samples, derive_seed(seed, 1), 20.0}));
    rep.lines.push_back("samples=" + std::to_string(samples) + " seed=" + std::to_string(seed));
    return rep;
}

OracleReport quadrature_oracle(const Scenario& s) {
    OracleReport rep{"quadrature", true, {}};
    std::vector<NoiseSource> sources = noise_sources(s);
    for (auto& src : sources)
        if (src.b_perp_sq == 0.0) src.b_perp_sq = 1e-9; // normalisation is linear in b^2
    using boost::math::quadrature::gauss_kronrod;
    for (const auto& src : sources) {
        // Integrate in units of omega0 so the Lorentzian width is O(1) in
        // the quadrature variable.
        const double w0 = s.omega0;
        auto integrand = [&](double u) { return lorentzian_psd(src, AngularFrequency{u * w0}) * w0 / kTwoPi; };
        const double inf = std::numeric_limits<double>::infinity();
        double err = 0.0;
        const double full = gauss_kronrod<double, 61>::integrate(integrand, -inf, inf, 25, 1e-13, &err);
        const double rel_full = std::abs(full / src.b_perp_sq - 1.0);

        const double width = 100.0 / (src.tau_c * w0); // in omega0 units
        const double window = gauss_kronrod<double, 61>::integrate(integrand, -width, width, 25, 1e-13, &err);
        const double analytic = src.b_perp_sq * 2.0 / std::numbers::pi * std::atan(width * w0 * src.tau_c);
        const double rel_window = std::abs(window / analytic - 1.0);

        const bool ok = rel_full < 1e-6 && rel_window < 1e-6;
        rep.passed = rep.passed && ok;
        rep.lines.push_back(src.label + ": full-line rel.err=" + format_double(rel_full) +
                            ", |w|<100/tau_c vs arctan rel.err=" + format_double(rel_window) + (ok ? " PASS" : " FAIL"));
    }
    return rep;
}

RatioScan sensitivity_ratio_scan(const Scenario& s, std::size_t points) {
    require(points >= 10, "ratio scan needs at least 10 points");
    SensitivityInputs inp = s.sensitivity_inputs();
    VolumeBath bath = s.gd;
    inp.b_perp_sq = bath.number_density > 0.0 ? b_perp_sq_volume(centred(s.particle), bath) : 1e-8;

    RatioScan scan;
    const double w0 = s.omega0;
    for (std::size_t i = 0; i < points; ++i) {
        const double r = w0 * std::pow(10.0, -1.0 + 3.0 * static_cast<double>(i) / static_cast<double>(points - 1));
        if (std::abs(r - w0) < 0.2 * w0) continue;
        inp.r_total = r;
        const double formula = delta_r_min(inp);
        const double oracle = delta_r_oracle(inp, 1e-4 * r).delta_r;
        const double halved = delta_r_oracle(inp, 0.5e-4 * r).delta_r;
        scan.rates.push_back(r);
        scan.ratios.push_back(formula / oracle);
        scan.max_halving_change = std::max(scan.max_halving_change, std::abs(halved / oracle - 1.0));
    }
    auto sorted = scan.ratios;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    scan.median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    for (double q : scan.ratios) scan.max_rel_deviation = std::max(scan.max_rel_deviation, std::abs(q / scan.median - 1.0));
    return scan;
}

OracleReport sensitivity_oracle(const Scenario& s) {
    const RatioScan scan = sensitivity_ratio_scan(s);
    OracleReport rep{"sensitivity", true, {}};
    const bool constant = scan.max_rel_deviation <= 0.10;
    const bool converged = scan.max_halving_change < 0.005;
    rep.passed = constant && converged;
    rep.lines.push_back("formula/oracle median ratio=" + format_double(scan.median) + " over " +
                        std::to_string(scan.ratios.size()) + " rates in [0.1, 100] omega0");
    rep.lines.push_back("max deviation from median=" + format_double(scan.max_rel_deviation) +
                        (constant ? " PASS" : " FAIL") + " (limit 0.10)");
    rep.lines.push_back("max change on halving the FD step=" + format_double(scan.max_halving_change) +
                        (converged ? " PASS" : " FAIL") + " (limit 0.005)");
    return rep;
}

} // namespace rbm
