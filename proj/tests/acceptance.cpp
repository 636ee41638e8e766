// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <rbm/bath.hpp>
#include <rbm/hydro.hpp>
#include <rbm/measure.hpp>
#include <rbm/model.hpp>
#include <rbm/relax.hpp>
#include <rbm/scenario.hpp>
#include <rbm/sensitivity.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace rbm;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail, double seconds) {
    std::printf("[%s] %d %s: %s (%.2f s)\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str(), seconds);
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

bool within(double v, double target, double rel) { return std::abs(v / target - 1.0) <= rel; }

void run(int id, const std::string& name, const std::function<std::pair<bool, std::string>()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    std::pair<bool, std::string> r;
    try {
        r = body();
    } catch (const std::exception& e) {
        r = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(id, name, r.first, r.second, dt);
}

double rot_rate(const Scenario& s, double x) {
    const auto m = s.mixture();
    HydroParams p{s.molecule_radius, m.effective_radius(x), m.viscosity(x), s.temperature};
    return rbm_rate(p, s.solvent.microviscosity ? Microviscosity::Included : Microviscosity::Neglected);
}

std::pair<bool, std::string> acetone_anchor() {
    const auto s = Scenario::defaults();
    const double r = rot_rate(s, 0.0);
    return {within(r, 14.2e9, 0.05), fmt("R_rot(acetone) = %.3f GHz with a = %.4f nm", r / 1e9, s.molecule_radius / 1e-9)};
}

std::pair<bool, std::string> mixture_range() {
    const auto s = Scenario::defaults();
    double lo = 1e300, hi = 0.0;
    for (int i = 0; i <= 2000; ++i) {
        const double x = 0.046 + (1.0 - 0.046) * i / 2000.0;
        const double r = rot_rate(s, x);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    return {within(lo, 2e9, 0.30) && within(hi, 14e9, 0.30),
            fmt("R_rot over x_water in [0.046, 1]: min %.3f GHz, max %.3f GHz", lo / 1e9, hi / 1e9)};
}

std::pair<bool, std::string> bare_baseline() {
    auto s = Scenario::defaults();
    s.gd.number_density = 0.0;
    const double t1 = predict_t1(s).t1;
    const double sigma =
        calibrate_surface_density(130e-6, s.particle, s.t1_bulk, AngularFrequency{s.omega0}, s.surface_tau_c, s.surface);
    const double factor = std::max(sigma / 1e18, 1e18 / sigma);
    return {within(t1, 130e-6, 0.10) && factor <= 2.0,
            fmt("bare T1 = %.2f us; inverted sigma = %.3f /nm^2 (factor %.2f from 1 /nm^2)", t1 / 1e-6, sigma / 1e18,
                factor)};
}

std::pair<bool, std::string> sensitivity_anchors() {
    auto s20 = Scenario::defaults();
    s20.particle.diameter = 20e-9;
    auto s25 = Scenario::defaults();
    s25.particle.diameter = 25e-9;
    // wide grid so the minimum is interior for both sizes
    std::vector<double> grid;
    for (int i = 0; i <= 200; ++i) grid.push_back(1e23 * std::pow(10.0, 5.0 * i / 200.0));
    const auto c20 = scenario_sensitivity(s20, grid);
    const auto c25 = scenario_sensitivity(s25, grid);
    const double m20 = c20.refined.delta_r_min;
    const double m25 = c25.refined.delta_r_min;
    const double ratio = m25 / m20;
    const bool ok = within(m20, 6.9e9, 0.25) && within(m25, 9.6e9, 0.25) && within(ratio, 1.39, 0.10) &&
                    within(c20.refined.r_total, 60.2e9, 0.25) && within(c25.refined.r_total, 60.2e9, 0.25) &&
                    !c20.boundary_warning && !c25.boundary_warning;
    return {ok, fmt("min dR = %.3f GHz (20 nm), %.3f GHz (25 nm), ratio %.4f; argmin R_total = %.2f / %.2f GHz", m20 / 1e9,
                    m25 / 1e9, ratio, c20.refined.r_total / 1e9, c25.refined.r_total / 1e9)};
}

std::pair<bool, std::string> bath_monte_carlo() {
    const auto s = Scenario::defaults();
    MonteCarloOptions opt;
    opt.samples = 1'000'000;
    opt.seed = s.seed;
    const auto ms = b_perp_mc(s.particle, s.surface, opt);
    const auto mv = b_perp_mc(s.particle, s.gd, opt);
    const double zs = (ms.mean - b_perp_sq_surface(s.particle, s.surface)) / ms.std_error;
    const double zv = (mv.mean - b_perp_sq_volume(s.particle, s.gd)) / mv.std_error;

    // stderr scaling: least-squares slope of log(stderr) against log(samples)
    std::vector<double> lx, ly;
    for (std::uint64_t n : {10'000ULL, 31'623ULL, 100'000ULL, 316'228ULL, 1'000'000ULL}) {
        MonteCarloOptions o;
        o.samples = n;
        o.seed = s.seed + 1;
        const auto r = b_perp_mc(s.particle, s.gd, o);
        lx.push_back(std::log(static_cast<double>(n)));
        ly.push_back(std::log(r.std_error));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i] / lx.size(), my += ly[i] / ly.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
    const double slope = sxy / sxx;
    const bool ok = std::abs(zs) <= 3.0 && std::abs(zv) <= 3.0 && std::abs(slope + 0.5) <= 0.05;
    return {ok, fmt("z(surface) = %+.2f, z(volume) = %+.2f at 1e6 samples; stderr slope %.4f", zs, zv, slope)};
}

std::pair<bool, std::string> fit_calibration() {
    const auto s = Scenario::defaults();
    const double t1 = predict_t1(s).t1;
    const auto plan = s.plan(t1);
    const int reps = 400;
    std::vector<double> err, sig, pull;
    int failed = 0;
    for (int i = 0; i < reps; ++i) {
        const auto fit = fit_exponential(simulate_curve(t1, plan, derive_seed(s.seed, 1000 + i)));
        if (!fit.converged || !(fit.t1_stderr > 0.0)) {
            ++failed;
            continue;
        }
        err.push_back(fit.t1_hat - t1);
        sig.push_back(fit.t1_stderr);
        pull.push_back((fit.t1_hat - t1) / fit.t1_stderr);
    }
    const double n = static_cast<double>(err.size());
    double bias = 0, rms_sig = 0, pm = 0, pv = 0;
    for (std::size_t i = 0; i < err.size(); ++i) bias += err[i] / n, rms_sig += sig[i] * sig[i] / n, pm += pull[i] / n;
    rms_sig = std::sqrt(rms_sig);
    for (double p : pull) pv += (p - pm) * (p - pm) / (n - 1.0);
    const bool ok = n >= 200 && std::abs(bias) < 0.5 * rms_sig && std::abs(pv - 1.0) <= 0.2;
    return {ok, fmt("%d replicates (%d failed): bias %.3f us = %.3f stderr, pull mean %+.3f, pull variance %.3f", reps,
                    failed, bias / 1e-6, bias / rms_sig, pm, pv)};
}

std::pair<bool, std::string> formula_vs_oracle() {
    const auto scan = sensitivity_ratio_scan(Scenario::defaults());
    const bool ok = scan.max_rel_deviation <= 0.10 && scan.rates.size() >= 50;
    return {ok, fmt("%zu rates in [0.1, 100] w0: ratio median %.5f (documented offset), max deviation %.2e, "
                    "step-halving change %.2e",
                    scan.rates.size(), scan.median, scan.max_rel_deviation, scan.max_halving_change)};
}

std::pair<bool, std::string> property_suite() {
    const auto s = Scenario::defaults();
    std::vector<std::string> bad;

    if (!quadrature_oracle(s).passed) bad.push_back("lorentzian normalisation");

    {
        NoiseSource src;
        src.b_perp_sq = 1e-9;
        std::vector<double> grid;
        for (int i = 0; i <= 2000; ++i) grid.push_back(s.omega0 * std::pow(10.0, -2.0 + 4.0 * i / 2000.0));
        const auto c = motional_narrowing_curve(src, AngularFrequency{s.omega0}, grid);
        const auto it = std::max_element(c.begin(), c.end(),
                                         [](const auto& a, const auto& b) { return a.contribution < b.contribution; });
        if (!within(it->rate, s.omega0, 5e-3)) bad.push_back("narrowing peak");
    }

    for (double ratio : {0.0, 0.01, 0.3, 1.0, 5.0, 100.0}) {
        const double f = microviscosity_factor(1e-9, ratio * 1e-9);
        if (!(f > 0.0 && f <= 1.0)) bad.push_back("f_r range");
    }
    if (microviscosity_factor(1e-9, 0.0) != 1.0) bad.push_back("f_r(a_s=0)");

    for (double k : {0.5, 3.0, 17.0}) {
        auto sb = s.surface;
        sb.areal_density *= k;
        auto vb = s.gd;
        vb.number_density *= k;
        if (!within(b_perp_sq_surface(s.particle, sb), k * b_perp_sq_surface(s.particle, s.surface), 1e-12) ||
            !within(b_perp_sq_volume(s.particle, vb), k * b_perp_sq_volume(s.particle, s.gd), 1e-12))
            bad.push_back("B_perp^2 linearity");
    }

    {
        auto in = s.sensitivity_inputs();
        in.b_perp_sq = b_perp_sq_volume(s.particle, s.gd);
        in.r_total = 60.2e9;
        const double d = delta_r_min(in);
        auto t = in;
        t.acquisition_time *= 4.0;
        auto cd = in;
        cd.contrast *= 2.0;
        cd.photon_rate /= 4.0;
        if (!within(delta_r_min(t), d / 2.0, 1e-13)) bad.push_back("sqrt(T) law");
        if (!within(delta_r_min(cd), d, 1e-13)) bad.push_back("C sqrt(D) law");
    }

    {
        auto dump = [&]() {
            const auto run = run_ensemble(s, 6, s.seed);
            std::ostringstream out;
            for (const auto& spot : run.spots) {
                write_curve(out, spot.curve);
                out << fit_to_json(spot.fit, &run.plan, spot.curve_seed);
            }
            return out.str();
        };
        if (dump() != dump()) bad.push_back("determinism");
    }

    std::string detail = "normalisation, narrowing peak, f_r, linearity, sqrt(T), C-D, determinism";
    if (!bad.empty()) {
        detail = "failed:";
        for (const auto& b : bad) detail += " " + b + ";";
    }
    return {bad.empty(), detail};
}

std::pair<bool, std::string> two_solvent_demo() {
    auto water = Scenario::defaults();
    water.solvent.x_water = 1.0;
    auto acetone = water;
    acetone.solvent.x_water = 0.046;
    const std::size_t spots = 100;
    const auto rw = run_ensemble(water, spots, water.seed);
    const auto ra = run_ensemble(acetone, spots, water.seed + 1);
    const auto gw = gaussian_summary(fitted_t1(rw));
    const auto ga = gaussian_summary(fitted_t1(ra));
    const auto z = separation(gw, ga);
    const bool ok = ga.mean > gw.mean && std::isfinite(z.pooled) && std::isfinite(z.of_means);
    return {ok, fmt("water %.2f +- %.2f us, acetone %.2f +- %.2f us (%zu/%zu spots); z geometric %.2f, pooled %.2f, "
                    "of means %.2f; jitter density %.0f%%, diameter %.0f%%",
                    gw.mean / 1e-6, gw.sigma / 1e-6, ga.mean / 1e-6, ga.sigma / 1e-6, gw.count, ga.count, z.geometric,
                    z.pooled, z.of_means, 100 * water.ensemble.density_rel_spread,
                    100 * water.ensemble.diameter_rel_spread)};
}

} // namespace

int main() {
    run(1, "acetone RBM anchor", acetone_anchor);
    run(2, "mixture range", mixture_range);
    run(3, "bare-particle baseline", bare_baseline);
    run(4, "sensitivity anchors", sensitivity_anchors);
    run(5, "Monte Carlo bath oracle", bath_monte_carlo);
    run(6, "fit calibration study", fit_calibration);
    run(7, "closed-form sensitivity vs oracle", formula_vs_oracle);
    run(8, "property suite", property_suite);
    run(9, "two-solvent separation demo", two_solvent_demo);
    std::printf("%s: %d of 9 criteria failed\n", failures ? "FAILED" : "PASSED", failures);
    return failures ? 1 : 0;
}
