#include "rbmrelax/rbmrelax.h"

#include <cstring>
#include <exception>
#include <fstream>
#include <string>

#include "rbm/calibration.hpp"
#include "rbm/error.hpp"
#include "rbm/model.hpp"

struct rr_scenario {
    rbm::Scenario value;
};

struct rr_curve {
    rbm::RelaxationCurve value;
};

struct rr_ensemble {
    rbm::EnsembleRun value;
};

struct rr_sensitivity {
    rbm::SensitivityCurve value;
};

namespace {

thread_local std::string g_last_error;

rr_status fail(rr_status code, const std::string& message) {
    g_last_error = message;
    return code;
}

template <class F>
rr_status guard(F&& body) noexcept {
    try {
        body();
        return RR_OK;
    } catch (const rbm::ParseError& e) {
        return fail(RR_ERR_PARSE, e.what());
    } catch (const rbm::ParameterError& e) {
        return fail(RR_ERR_INVALID, e.what());
    } catch (const rbm::NumericalError& e) {
        return fail(RR_ERR_NUMERICAL, e.what());
    } catch (const rbm::IoError& e) {
        return fail(RR_ERR_IO, e.what());
    } catch (const std::bad_alloc&) {
        return fail(RR_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(RR_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(RR_ERR_INTERNAL, "unknown error");
    }
}

void need(const void* p, const char* what) {
    if (!p) throw rbm::ParameterError(std::string(what) + " must not be NULL");
}

rr_status copy_out(const std::string& text, char* buf, size_t cap, size_t* len) {
    if (len) *len = text.size();
    if (!buf || cap < text.size() + 1) {
        if (buf && cap > 0) buf[0] = '\0';
        return fail(RR_ERR_INVALID, "output buffer too small");
    }
    std::memcpy(buf, text.c_str(), text.size() + 1);
    return RR_OK;
}

void to_c(const rbm::FitResult& f, rr_fit* out) {
    out->t1 = f.t1_hat;
    out->t1_stderr = f.t1_stderr;
    out->amplitude = f.amplitude;
    out->baseline = f.baseline;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) out->covariance[3 * a + b] = f.covariance[a][b];
    out->reduced_chi_sq = f.reduced_chi_sq;
    out->converged = f.converged;
    out->ill_conditioned = f.ill_conditioned;
    out->weighted = f.weighted;
    out->iterations = f.iterations;
    std::strncpy(out->message, f.message.c_str(), sizeof out->message - 1);
    out->message[sizeof out->message - 1] = '\0';
}

rbm::FitResult from_c(const rr_fit& f) {
    rbm::FitResult out;
    out.t1_hat = f.t1;
    out.t1_stderr = f.t1_stderr;
    out.amplitude = f.amplitude;
    out.baseline = f.baseline;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) out.covariance[a][b] = f.covariance[3 * a + b];
    out.reduced_chi_sq = f.reduced_chi_sq;
    out.converged = f.converged != 0;
    out.ill_conditioned = f.ill_conditioned != 0;
    out.weighted = f.weighted != 0;
    out.iterations = f.iterations;
    out.message = f.message;
    return out;
}

rr_t1_report to_c(const rbm::T1Report& r) {
    return {r.t1,           r.rate_total,        r.rate_bulk,        r.rate_surface,     r.rate_gd,
            r.b_perp_sq_surface, r.b_perp_sq_gd, r.gd_rates.r_dip,   r.gd_rates.r_vib,   r.gd_rates.r_trans,
            r.gd_rates.r_rot, r.gd_rates.r_total, r.viscosity,       r.f_r,              r.a_s,
            r.x_water,      r.diameter,          r.density};
}

rbm::T1Report from_c(const rr_t1_report& r) {
    rbm::T1Report o;
    o.t1 = r.t1;
    o.rate_total = r.rate_total;
    o.rate_bulk = r.rate_bulk;
    o.rate_surface = r.rate_surface;
    o.rate_gd = r.rate_gd;
    o.b_perp_sq_surface = r.b_perp_sq_surface;
    o.b_perp_sq_gd = r.b_perp_sq_gd;
    o.gd_rates = {r.r_dip, r.r_vib, r.r_trans, r.r_rot, r.r_total};
    o.viscosity = r.viscosity;
    o.f_r = r.f_r;
    o.a_s = r.a_s;
    o.x_water = r.x_water;
    o.diameter = r.diameter;
    o.density = r.density;
    return o;
}

rbm::SweepAxis to_axis(rr_axis a) {
    switch (a) {
    case RR_AXIS_GD_DENSITY: return rbm::SweepAxis::GdDensity;
    case RR_AXIS_WATER_FRACTION: return rbm::SweepAxis::WaterFraction;
    case RR_AXIS_DIAMETER: return rbm::SweepAxis::Diameter;
    }
    throw rbm::ParameterError("invalid axis");
}

rbm::SensitivityInputs to_cpp(const rr_sensitivity_inputs& in) {
    rbm::SensitivityInputs o;
    o.contrast = in.contrast;
    o.photon_rate = in.photon_rate;
    o.detection_window = in.detection_window;
    o.acquisition_time = in.acquisition_time;
    o.gamma_e = in.gamma_e;
    o.b_perp_sq = in.b_perp_sq;
    o.r_total = in.r_total;
    o.omega0 = in.omega0;
    return o;
}

rr_sensitivity_point to_c(const rbm::SensitivityPoint& p) { return {p.density, p.r_total, p.b_perp_sq, p.delta_r_min}; }

void write_text(const char* path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw rbm::IoError(std::string("cannot write ") + path);
    out << text;
    if (!out) throw rbm::IoError(std::string("write failed: ") + path);
}

rbm::ParticleGeometry centred(const rbm::Scenario& s) {
    rbm::ParticleGeometry g = s.particle;
    g.sensor_offset = 0.0;
    return g;
}

} // namespace

extern "C" {

const char* rr_last_error(void) { return g_last_error.c_str(); }

const char* rr_version(void) { return "0.1.0"; }

// ---- scenario ---------------------------------------------------------------

rr_status rr_scenario_default(rr_scenario** out) {
    return guard([&] {
        need(out, "out");
        *out = new rr_scenario{rbm::Scenario::defaults()};
    });
}

rr_status rr_scenario_load(const char* path, rr_scenario** out) {
    return guard([&] {
        need(path, "path");
        need(out, "out");
        *out = new rr_scenario{rbm::load_scenario(path)};
    });
}

rr_status rr_scenario_parse(const char* text, const char* base_dir, rr_scenario** out) {
    return guard([&] {
        need(text, "text");
        need(out, "out");
        *out = new rr_scenario{rbm::parse_scenario(text, base_dir ? base_dir : "")};
    });
}

rr_status rr_scenario_clone(const rr_scenario* s, rr_scenario** out) {
    return guard([&] {
        need(s, "scenario");
        need(out, "out");
        *out = new rr_scenario{s->value};
    });
}

rr_status rr_scenario_set(rr_scenario* s, const char* key, const char* value) {
    return guard([&] {
        need(s, "scenario");
        need(key, "key");
        need(value, "value");
        rbm::Scenario updated = s->value;
        updated.set(key, value);
        updated.validate();
        s->value = std::move(updated);
    });
}

rr_status rr_scenario_get(const rr_scenario* s, const char* key, char* buf, size_t cap, size_t* len) {
    std::string text;
    const rr_status st = guard([&] {
        need(s, "scenario");
        need(key, "key");
        text = s->value.get(key);
    });
    return st != RR_OK ? st : copy_out(text, buf, cap, len);
}

rr_status rr_scenario_serialize(const rr_scenario* s, char* buf, size_t cap, size_t* len) {
    std::string text;
    const rr_status st = guard([&] {
        need(s, "scenario");
        text = rbm::serialize_scenario(s->value);
    });
    return st != RR_OK ? st : copy_out(text, buf, cap, len);
}

rr_status rr_scenario_hash(const rr_scenario* s, char out[65]) {
    return guard([&] {
        need(s, "scenario");
        need(out, "out");
        const auto h = rbm::scenario_hash(s->value);
        std::memcpy(out, h.c_str(), 65);
    });
}

void rr_scenario_free(rr_scenario* s) { delete s; }

// ---- forward model ----------------------------------------------------------

rr_status rr_predict_t1(const rr_scenario* s, rr_t1_report* out) {
    return guard([&] {
        need(s, "scenario");
        need(out, "out");
        *out = to_c(rbm::predict_t1(s->value));
    });
}

rr_status rr_axis_from_name(const char* name, rr_axis* out) {
    return guard([&] {
        need(name, "name");
        need(out, "out");
        switch (rbm::parse_axis(name)) {
        case rbm::SweepAxis::GdDensity: *out = RR_AXIS_GD_DENSITY; break;
        case rbm::SweepAxis::WaterFraction: *out = RR_AXIS_WATER_FRACTION; break;
        case rbm::SweepAxis::Diameter: *out = RR_AXIS_DIAMETER; break;
        }
    });
}

rr_status rr_sweep(const rr_scenario* s, rr_axis axis, const double* grid, size_t n, rr_t1_report* rows) {
    return guard([&] {
        need(s, "scenario");
        need(grid, "grid");
        need(rows, "rows");
        const auto result = rbm::sweep(s->value, to_axis(axis), std::span(grid, n));
        for (size_t i = 0; i < n; ++i) rows[i] = to_c(result[i]);
    });
}

rr_status rr_sweep_write(const char* path, rr_axis axis, const double* grid, const rr_t1_report* rows, size_t n) {
    return guard([&] {
        need(path, "path");
        need(grid, "grid");
        need(rows, "rows");
        std::vector<rbm::T1Report> cpp;
        for (size_t i = 0; i < n; ++i) cpp.push_back(from_c(rows[i]));
        std::ofstream out(path);
        if (!out) throw rbm::IoError(std::string("cannot write ") + path);
        rbm::write_sweep(out, to_axis(axis), std::span(grid, n), cpp);
    });
}

// ---- baths ------------------------------------------------------------------

rr_status rr_bath_closed_form(const rr_scenario* s, rr_bath_kind kind, double* b_perp_sq) {
    return guard([&] {
        need(s, "scenario");
        need(b_perp_sq, "out");
        const auto g = s->value.particle;
        *b_perp_sq = kind == RR_BATH_SURFACE ? rbm::b_perp_sq_surface(g, s->value.surface)
                                             : rbm::b_perp_sq_volume(g, s->value.gd);
    });
}

rr_status rr_bath_monte_carlo(const rr_scenario* s, rr_bath_kind kind, uint64_t samples, uint64_t seed,
                              rr_mc_result* out) {
    return guard([&] {
        need(s, "scenario");
        need(out, "out");
        rbm::BathDescription bath = kind == RR_BATH_SURFACE ? rbm::BathDescription{s->value.surface}
                                                            : rbm::BathDescription{s->value.gd};
        const auto r = rbm::b_perp_mc(s->value.particle, bath, {samples, seed, 20.0});
        *out = {r.mean, r.std_error, r.tail_correction, r.samples, r.seed, r.tail_warning};
    });
}

rr_status rr_calibrate_surface_density(const rr_scenario* s, double t1_measured, double* areal_density) {
    return guard([&] {
        need(s, "scenario");
        need(areal_density, "out");
        const auto& v = s->value;
        *areal_density = rbm::calibrate_surface_density(t1_measured, centred(v), v.t1_bulk,
                                                        rbm::AngularFrequency{v.omega0}, v.surface_tau_c, v.surface);
    });
}

rr_status rr_fit_density_scale(const rr_scenario* s, const double* n_prepared, const double* t1, size_t n,
                               double* scale, double* scale_stderr) {
    return guard([&] {
        need(s, "scenario");
        need(n_prepared, "n_prepared");
        need(t1, "t1");
        need(scale, "scale");
        std::vector<rbm::DensityPoint> pts;
        for (size_t i = 0; i < n; ++i) pts.push_back({n_prepared[i], t1[i]});
        const rbm::Scenario base = s->value;
        const auto fit = rbm::effective_gd_density_fit(pts, [&base](double density) {
            rbm::Scenario at = base;
            at.gd.number_density = density;
            return rbm::predict_t1(at).rate_total;
        });
        *scale = fit.scale;
        if (scale_stderr) *scale_stderr = fit.scale_stderr;
    });
}

rr_status rr_calibrate(const rr_scenario* base, rr_calibration* out) {
    return guard([&] {
        need(base, "scenario");
        need(out, "out");
        const auto c = rbm::calibrate(base->value);
        *out = {c.molecule_radius, c.r_vib, c.kappa_dip, c.optimal_density, c.surface_density, c.surface_tau_c,
                c.background_rate};
    });
}

// ---- curves and fits ----------------------------------------------------------

rr_status rr_curve_simulate(const rr_scenario* s, double t1_true, uint64_t seed, rr_curve** out) {
    return guard([&] {
        need(s, "scenario");
        need(out, "out");
        *out = new rr_curve{rbm::simulate_curve(t1_true, s->value.plan(t1_true), seed)};
    });
}

rr_status rr_curve_from_points(const double* tau, const double* signal, const double* std_error, size_t n,
                               rr_curve** out) {
    return guard([&] {
        need(tau, "tau");
        need(signal, "signal");
        need(out, "out");
        rbm::RelaxationCurve c;
        for (size_t i = 0; i < n; ++i) c.points.push_back({tau[i], signal[i], std_error ? std_error[i] : 0.0});
        *out = new rr_curve{std::move(c)};
    });
}

rr_status rr_curve_read(const char* path, rr_curve** out) {
    return guard([&] {
        need(path, "path");
        need(out, "out");
        *out = new rr_curve{rbm::read_curve(std::filesystem::path(path))};
    });
}

rr_status rr_curve_write(const rr_curve* c, const char* path) {
    return guard([&] {
        need(c, "curve");
        need(path, "path");
        rbm::write_curve(std::filesystem::path(path), c->value);
    });
}

size_t rr_curve_size(const rr_curve* c) { return c ? c->value.points.size() : 0; }

rr_status rr_curve_point(const rr_curve* c, size_t i, double* tau, double* signal, double* std_error) {
    return guard([&] {
        need(c, "curve");
        if (i >= c->value.points.size()) throw rbm::ParameterError("curve index out of range");
        const auto& p = c->value.points[i];
        if (tau) *tau = p.tau;
        if (signal) *signal = p.signal;
        if (std_error) *std_error = p.std_error;
    });
}

void rr_curve_free(rr_curve* c) { delete c; }

rr_status rr_fit_curve(const rr_curve* c, const double* guess, rr_fit* out) {
    return guard([&] {
        need(c, "curve");
        need(out, "out");
        std::optional<rbm::FitGuess> g;
        if (guess) g = rbm::FitGuess{guess[0], guess[1], guess[2]};
        to_c(rbm::fit_exponential(c->value, g), out);
    });
}

rr_status rr_fit_write_json(const rr_fit* fit, const char* path) {
    return guard([&] {
        need(fit, "fit");
        need(path, "path");
        write_text(path, rbm::fit_to_json(from_c(*fit)));
    });
}

// ---- ensembles ----------------------------------------------------------------

rr_status rr_ensemble_run(const rr_scenario* s, size_t n_spots, uint64_t seed, rr_ensemble** out) {
    return guard([&] {
        need(s, "scenario");
        need(out, "out");
        *out = new rr_ensemble{rbm::run_ensemble(s->value, n_spots, seed)};
    });
}

size_t rr_ensemble_size(const rr_ensemble* e) { return e ? e->value.spots.size() : 0; }

double rr_ensemble_nominal_t1(const rr_ensemble* e) { return e ? e->value.nominal_t1 : 0.0; }

rr_status rr_ensemble_spot(const rr_ensemble* e, size_t i, rr_spot* out) {
    return guard([&] {
        need(e, "ensemble");
        need(out, "out");
        if (i >= e->value.spots.size()) throw rbm::ParameterError("spot index out of range");
        const auto& sp = e->value.spots[i];
        out->true_t1 = sp.truth.t1;
        out->density = sp.truth.density;
        out->diameter = sp.truth.diameter;
        out->curve_seed = sp.curve_seed;
        to_c(sp.fit, &out->fit);
    });
}

rr_status rr_ensemble_write_curve(const rr_ensemble* e, size_t i, const char* path) {
    return guard([&] {
        need(e, "ensemble");
        need(path, "path");
        if (i >= e->value.spots.size()) throw rbm::ParameterError("spot index out of range");
        rbm::write_curve(std::filesystem::path(path), e->value.spots[i].curve);
    });
}

rr_status rr_ensemble_write_fit(const rr_ensemble* e, size_t i, const char* path) {
    return guard([&] {
        need(e, "ensemble");
        need(path, "path");
        if (i >= e->value.spots.size()) throw rbm::ParameterError("spot index out of range");
        const auto& sp = e->value.spots[i];
        write_text(path, rbm::fit_to_json(sp.fit, &e->value.plan, sp.curve_seed));
    });
}

rr_status rr_ensemble_summary(const rr_ensemble* e, rr_gaussian* out) {
    return guard([&] {
        need(e, "ensemble");
        need(out, "out");
        const auto t1 = rbm::fitted_t1(e->value);
        const auto g = rbm::gaussian_summary(t1);
        *out = {g.mean, g.sigma, g.count};
    });
}

void rr_ensemble_free(rr_ensemble* e) { delete e; }

rr_status rr_gaussian_summary(const double* samples, size_t n, rr_gaussian* out) {
    return guard([&] {
        need(samples, "samples");
        need(out, "out");
        const auto g = rbm::gaussian_summary(std::span(samples, n));
        *out = {g.mean, g.sigma, g.count};
    });
}

rr_status rr_separation_compute(const rr_gaussian* a, const rr_gaussian* b, rr_separation* out) {
    return guard([&] {
        need(a, "a");
        need(b, "b");
        need(out, "out");
        const auto s = rbm::separation({a->mean, a->sigma, a->count}, {b->mean, b->sigma, b->count});
        *out = {s.geometric, s.pooled, s.of_means};
    });
}

// ---- sensitivity --------------------------------------------------------------

rr_status rr_delta_r_min(const rr_sensitivity_inputs* in, double* out) {
    return guard([&] {
        need(in, "inputs");
        need(out, "out");
        *out = rbm::delta_r_min(to_cpp(*in));
    });
}

rr_status rr_delta_r_oracle(const rr_sensitivity_inputs* in, double perturbation, double* out) {
    return guard([&] {
        need(in, "inputs");
        need(out, "out");
        *out = rbm::delta_r_oracle(to_cpp(*in), perturbation).delta_r;
    });
}

rr_status rr_sensitivity_compute(const rr_scenario* s, const double* grid, size_t n, rr_sensitivity** out) {
    return guard([&] {
        need(s, "scenario");
        need(out, "out");
        std::span<const double> g;
        if (grid) g = std::span(grid, n);
        *out = new rr_sensitivity{rbm::scenario_sensitivity(s->value, g)};
    });
}

size_t rr_sensitivity_size(const rr_sensitivity* c) { return c ? c->value.points.size() : 0; }

rr_status rr_sensitivity_point_at(const rr_sensitivity* c, size_t i, rr_sensitivity_point* out) {
    return guard([&] {
        need(c, "curve");
        need(out, "out");
        if (i >= c->value.points.size()) throw rbm::ParameterError("index out of range");
        *out = to_c(c->value.points[i]);
    });
}

rr_status rr_sensitivity_minimum(const rr_sensitivity* c, rr_sensitivity_point* grid_min,
                                 rr_sensitivity_point* refined, int* boundary_warning) {
    return guard([&] {
        need(c, "curve");
        if (grid_min) *grid_min = to_c(c->value.points[c->value.argmin]);
        if (refined) *refined = to_c(c->value.refined);
        if (boundary_warning) *boundary_warning = c->value.boundary_warning;
    });
}

size_t rr_sensitivity_notice_count(const rr_sensitivity* c) { return c ? c->value.notices.size() : 0; }

const char* rr_sensitivity_notice(const rr_sensitivity* c, size_t i) {
    if (!c || i >= c->value.notices.size()) return nullptr;
    return c->value.notices[i].c_str();
}

rr_status rr_sensitivity_write(const rr_sensitivity* c, const char* path) {
    return guard([&] {
        need(c, "curve");
        need(path, "path");
        rbm::write_sensitivity_curve(std::filesystem::path(path), c->value);
    });
}

void rr_sensitivity_free(rr_sensitivity* c) { delete c; }

// ---- oracles ----------------------------------------------------------------

rr_status rr_oracle_from_name(const char* name, rr_oracle_kind* out) {
    return guard([&] {
        need(name, "name");
        need(out, "out");
        const std::string n = name;
        if (n == "bath_mc") *out = RR_ORACLE_BATH_MC;
        else if (n == "sensitivity") *out = RR_ORACLE_SENSITIVITY;
        else if (n == "quadrature") *out = RR_ORACLE_QUADRATURE;
        else throw rbm::ParameterError("unknown oracle '" + n + "' (bath_mc | sensitivity | quadrature)");
    });
}

rr_status rr_oracle_run(const rr_scenario* s, rr_oracle_kind kind, char* report, size_t cap, size_t* len,
                        int* passed) {
    rbm::OracleReport rep;
    const rr_status st = guard([&] {
        need(s, "scenario");
        switch (kind) {
        case RR_ORACLE_BATH_MC: rep = rbm::bath_oracle(s->value, s->value.mc_samples, s->value.seed); break;
        case RR_ORACLE_SENSITIVITY: rep = rbm::sensitivity_oracle(s->value); break;
        case RR_ORACLE_QUADRATURE: rep = rbm::quadrature_oracle(s->value); break;
        default: throw rbm::ParameterError("invalid oracle kind");
        }
    });
    if (st != RR_OK) return st;
    if (passed) *passed = rep.passed;
    std::string text = rep.name + ": " + (rep.passed ? "PASS" : "FAIL") + "\n";
    for (const auto& l : rep.lines) text += "  " + l + "\n";
    const rr_status cs = copy_out(text, report, cap, len);
    if (cs != RR_OK) return cs;
    return rep.passed ? RR_OK : fail(RR_ERR_ORACLE, rep.name + " oracle failed");
}

} // extern "C"
