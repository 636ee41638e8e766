// rbmrelax command-line front end. Talks to the library only through the C API.

#include <rbmrelax/rbmrelax.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kValidation = 1, kNumerical = 2, kOracle = 3 };

struct Failure {
    int code;
    std::string message;
};

int exit_code(rr_status st) {
    switch (st) {
    case RR_OK: return kOk;
    case RR_ERR_NUMERICAL: return kNumerical;
    case RR_ERR_ORACLE: return kOracle;
    default: return kValidation;
    }
}

void check(rr_status st, const std::string& what) {
    if (st != RR_OK) throw Failure{exit_code(st), what + ": " + rr_last_error()};
}

struct ScenarioDeleter {
    void operator()(rr_scenario* s) const { rr_scenario_free(s); }
};
struct CurveDeleter {
    void operator()(rr_curve* c) const { rr_curve_free(c); }
};
struct EnsembleDeleter {
    void operator()(rr_ensemble* e) const { rr_ensemble_free(e); }
};
struct SensitivityDeleter {
    void operator()(rr_sensitivity* c) const { rr_sensitivity_free(c); }
};
using ScenarioPtr = std::unique_ptr<rr_scenario, ScenarioDeleter>;
using CurvePtr = std::unique_ptr<rr_curve, CurveDeleter>;
using EnsemblePtr = std::unique_ptr<rr_ensemble, EnsembleDeleter>;
using SensitivityPtr = std::unique_ptr<rr_sensitivity, SensitivityDeleter>;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string short_fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// Reads a string out of a (buf, cap, len) style getter, growing the buffer as needed.
template <class F>
std::string read_string(F&& getter, const std::string& what) {
    std::string buf(256, '\0');
    size_t len = 0;
    rr_status st = getter(buf.data(), buf.size(), &len);
    if (st == RR_ERR_INVALID && len + 1 > buf.size()) {
        buf.assign(len + 1, '\0');
        st = getter(buf.data(), buf.size(), &len);
    }
    check(st, what);
    buf.resize(len);
    return buf;
}

void apply_override(rr_scenario* s, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw Failure{kValidation, "override '" + assignment + "' is not key=value"};
    const std::string key = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);
    check(rr_scenario_set(s, key.c_str(), value.c_str()), "--set " + key);
}

struct Common {
    std::string config;
    std::vector<std::string> overrides;
    std::optional<uint64_t> seed;
    std::string out;
};

ScenarioPtr load(const Common& c) {
    rr_scenario* raw = nullptr;
    if (c.config.empty())
        check(rr_scenario_default(&raw), "default scenario");
    else
        check(rr_scenario_load(c.config.c_str(), &raw), "config");
    ScenarioPtr s(raw);
    for (const auto& o : c.overrides) apply_override(s.get(), o);
    if (c.seed) check(rr_scenario_set(s.get(), "run.seed", std::to_string(*c.seed).c_str()), "--seed");
    return s;
}

std::string get(const rr_scenario* s, const std::string& key) {
    return read_string([&](char* b, size_t cap, size_t* len) { return rr_scenario_get(s, key.c_str(), b, cap, len); },
                       key);
}

std::string hash_of(const rr_scenario* s) {
    char out[65];
    check(rr_scenario_hash(s, out), "config hash");
    return out;
}

uint64_t seed_of(const rr_scenario* s) { return std::stoull(get(s, "run.seed")); }

// Grid specs: "lin:start:stop:n", "log:start:stop:n", or a comma list.
std::vector<double> parse_grid(const std::string& spec) {
    std::vector<double> grid;
    auto number = [&](const std::string& t) {
        try {
            size_t used = 0;
            const double v = std::stod(t, &used);
            if (used != t.size()) throw std::invalid_argument(t);
            return v;
        } catch (const std::exception&) {
            throw Failure{kValidation, "bad number '" + t + "' in grid '" + spec + "'"};
        }
    };
    auto split = [](const std::string& text, char sep) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        std::string p;
        while (std::getline(ss, p, sep)) parts.push_back(p);
        return parts;
    };
    if (spec.rfind("lin:", 0) == 0 || spec.rfind("log:", 0) == 0) {
        const auto parts = split(spec.substr(4), ':');
        if (parts.size() != 3) throw Failure{kValidation, "grid spec must be kind:start:stop:n"};
        const double a = number(parts[0]);
        const double b = number(parts[1]);
        const double nd = number(parts[2]);
        if (nd < 2 || nd != std::floor(nd)) throw Failure{kValidation, "grid needs an integer n >= 2"};
        const auto n = static_cast<size_t>(nd);
        const bool log = spec[1] == 'o';
        if (log && (a <= 0 || b <= 0)) throw Failure{kValidation, "log grid bounds must be positive"};
        for (size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / static_cast<double>(n - 1);
            grid.push_back(log ? std::exp(std::log(a) + t * (std::log(b) - std::log(a))) : a + t * (b - a));
        }
        grid.front() = a;
        grid.back() = b;
    } else {
        for (const auto& p : split(spec, ',')) grid.push_back(number(p));
    }
    if (grid.empty()) throw Failure{kValidation, "empty grid"};
    if (!std::is_sorted(grid.begin(), grid.end())) throw Failure{kValidation, "grid must be ascending"};
    return grid;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Failure{kValidation, "cannot write " + path.string()};
    out << text;
    if (!out) throw Failure{kValidation, "write failed for " + path.string()};
}

// Creates dir and proves it is writable before any work is done.
void prepare_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Failure{kValidation, "cannot create " + dir.string() + ": " + ec.message()};
    const fs::path probe = dir / ".rbmrelax_probe";
    {
        std::ofstream out(probe);
        if (!out) throw Failure{kValidation, "output directory " + dir.string() + " is not writable"};
    }
    fs::remove(probe, ec);
}

ordered_json fit_json(const rr_fit& f) {
    auto num = [](double v) -> ordered_json {
        if (std::isfinite(v)) return v;
        return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    };
    return ordered_json{{"t1_s", num(f.t1)},
                        {"t1_stderr_s", num(f.t1_stderr)},
                        {"converged", f.converged != 0},
                        {"reduced_chi_sq", num(f.reduced_chi_sq)}};
}

// ---- verbs -----------------------------------------------------------------

int cmd_t1(const Common& c) {
    auto s = load(c);
    rr_t1_report r{};
    check(rr_predict_t1(s.get(), &r), "t1");
    const double check_rate = r.rate_bulk + r.rate_surface + r.rate_gd;
    std::printf("T1                 %s s\n", short_fmt(r.t1).c_str());
    std::printf("1/T1               %s 1/s\n", short_fmt(r.rate_total).c_str());
    std::printf("  bulk             %s 1/s\n", short_fmt(r.rate_bulk).c_str());
    std::printf("  surface          %s 1/s\n", short_fmt(r.rate_surface).c_str());
    std::printf("  gd               %s 1/s\n", short_fmt(r.rate_gd).c_str());
    std::printf("  sum check        %s (relative)\n", short_fmt((check_rate - r.rate_total) / r.rate_total).c_str());
    std::printf("B_perp^2 surface   %s T^2\n", short_fmt(r.b_perp_sq_surface).c_str());
    std::printf("B_perp^2 gd        %s T^2\n", short_fmt(r.b_perp_sq_gd).c_str());
    std::printf("Gd fluctuation rates (1/s)\n");
    std::printf("  dipolar          %s\n", short_fmt(r.r_dip).c_str());
    std::printf("  vibrational      %s\n", short_fmt(r.r_vib).c_str());
    std::printf("  translational    %s\n", short_fmt(r.r_trans).c_str());
    std::printf("  rotational       %s\n", short_fmt(r.r_rot).c_str());
    std::printf("  total            %s\n", short_fmt(r.r_total).c_str());
    std::printf("solvent x_water=%s eta=%s Pa s f_r=%s a_s=%s m\n", short_fmt(r.x_water).c_str(),
                short_fmt(r.viscosity).c_str(), short_fmt(r.f_r).c_str(), short_fmt(r.a_s).c_str());

    if (!c.out.empty()) {
        ordered_json j{{"t1_s", r.t1},
                       {"rate_total_per_s", r.rate_total},
                       {"rate_bulk_per_s", r.rate_bulk},
                       {"rate_surface_per_s", r.rate_surface},
                       {"rate_gd_per_s", r.rate_gd},
                       {"b_perp_sq_surface_T2", r.b_perp_sq_surface},
                       {"b_perp_sq_gd_T2", r.b_perp_sq_gd},
                       {"r_dip_per_s", r.r_dip},
                       {"r_vib_per_s", r.r_vib},
                       {"r_trans_per_s", r.r_trans},
                       {"r_rot_per_s", r.r_rot},
                       {"r_total_per_s", r.r_total},
                       {"viscosity_Pa_s", r.viscosity},
                       {"f_r", r.f_r},
                       {"a_s_m", r.a_s},
                       {"x_water", r.x_water},
                       {"diameter_m", r.diameter},
                       {"gd_density_per_m3", r.density},
                       {"config_hash", hash_of(s.get())}};
        write_text(c.out, j.dump(2) + "\n");
    }
    return kOk;
}

int cmd_sweep(const Common& c, const std::string& axis_name, const std::string& grid_spec) {
    rr_axis axis{};
    check(rr_axis_from_name(axis_name.c_str(), &axis), "--axis");
    const auto grid = parse_grid(grid_spec);
    auto s = load(c);
    std::vector<rr_t1_report> rows(grid.size());
    check(rr_sweep(s.get(), axis, grid.data(), grid.size(), rows.data()), "sweep");
    if (c.out.empty() || c.out == "-") {
        const fs::path tmp = fs::temp_directory_path() / ("rbmrelax_sweep_" + std::to_string(::getpid()) + ".csv");
        check(rr_sweep_write(tmp.c_str(), axis, grid.data(), rows.data(), rows.size()), "sweep output");
        std::ifstream in(tmp);
        std::cout << in.rdbuf();
        fs::remove(tmp);
    } else {
        check(rr_sweep_write(c.out.c_str(), axis, grid.data(), rows.data(), rows.size()), "sweep output");
        std::printf("wrote %zu rows to %s\n", rows.size(), c.out.c_str());
    }
    return kOk;
}

struct Condition {
    std::string name;
    std::vector<std::string> overrides;
};

// "name:key=value,key=value"
Condition parse_condition(const std::string& spec) {
    const auto colon = spec.find(':');
    Condition c;
    c.name = spec.substr(0, colon);
    if (c.name.empty() || c.name.find_first_of("/\\. ") != std::string::npos)
        throw Failure{kValidation, "bad condition name in '" + spec + "'"};
    if (colon != std::string::npos) {
        std::stringstream ss(spec.substr(colon + 1));
        std::string a;
        while (std::getline(ss, a, ','))
            if (!a.empty()) c.overrides.push_back(a);
    }
    return c;
}

std::string spot_name(size_t i, const char* suffix) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "spot_%04zu%s", i, suffix);
    return buf;
}

int cmd_simulate(const Common& c, size_t n_spots, const std::vector<std::string>& condition_specs) {
    if (c.out.empty()) throw Failure{kValidation, "simulate needs --out DIR"};
    if (n_spots == 0) throw Failure{kValidation, "--spots must be positive"};
    std::vector<Condition> conditions;
    for (const auto& spec : condition_specs) conditions.push_back(parse_condition(spec));
    if (conditions.empty()) conditions.push_back({"nominal", {}});
    for (size_t i = 0; i < conditions.size(); ++i)
        for (size_t k = 0; k < i; ++k)
            if (conditions[i].name == conditions[k].name)
                throw Failure{kValidation, "duplicate condition '" + conditions[i].name + "'"};

    auto base = load(c);
    std::vector<ScenarioPtr> scenarios;
    for (const auto& cond : conditions) {
        rr_scenario* raw = nullptr;
        check(rr_scenario_clone(base.get(), &raw), "clone");
        ScenarioPtr s(raw);
        for (const auto& o : cond.overrides) apply_override(s.get(), o);
        scenarios.push_back(std::move(s));
    }

    const fs::path dir(c.out);
    prepare_dir(dir);
    for (const auto& cond : conditions) prepare_dir(dir / cond.name);

    const std::string started = utc_now();
    const uint64_t master = seed_of(base.get());
    std::vector<std::string> outputs;
    ordered_json summary;
    summary["seed"] = master;
    summary["spots_per_condition"] = n_spots;
    std::vector<rr_gaussian> gaussians;
    int status = kOk;

    for (size_t k = 0; k < conditions.size(); ++k) {
        const auto& cond = conditions[k];
        rr_scenario* s = scenarios[k].get();
        // Conditions get disjoint seed streams; the first keeps the master seed.
        const uint64_t seed = master + 0x9E3779B97F4A7C15ULL * k;
        rr_ensemble* raw = nullptr;
        check(rr_ensemble_run(s, n_spots, seed, &raw), "simulate " + cond.name);
        EnsemblePtr e(raw);

        ordered_json spots = ordered_json::array();
        size_t failed = 0;
        for (size_t i = 0; i < rr_ensemble_size(e.get()); ++i) {
            rr_spot spot{};
            check(rr_ensemble_spot(e.get(), i, &spot), "spot");
            const fs::path curve = dir / cond.name / spot_name(i, ".csv");
            const fs::path fit = dir / cond.name / spot_name(i, ".fit.json");
            check(rr_ensemble_write_curve(e.get(), i, curve.c_str()), "curve output");
            check(rr_ensemble_write_fit(e.get(), i, fit.c_str()), "fit output");
            outputs.push_back(fs::relative(curve, dir).string());
            outputs.push_back(fs::relative(fit, dir).string());
            if (!spot.fit.converged) ++failed;
            ordered_json row{{"spot", i},
                             {"curve_seed", spot.curve_seed},
                             {"true_t1_s", spot.true_t1},
                             {"gd_density_per_m3", spot.density},
                             {"diameter_m", spot.diameter}};
            row["fit"] = fit_json(spot.fit);
            spots.push_back(row);
        }

        ordered_json entry;
        entry["name"] = cond.name;
        entry["overrides"] = cond.overrides;
        entry["config_hash"] = hash_of(s);
        entry["seed"] = seed;
        entry["nominal_t1_s"] = rr_ensemble_nominal_t1(e.get());
        entry["density_rel_spread"] = std::stod(get(s, "ensemble.density_rel_spread"));
        entry["diameter_rel_spread"] = std::stod(get(s, "ensemble.diameter_rel_spread"));
        entry["failed_fits"] = failed;
        rr_gaussian g{};
        const rr_status st = rr_ensemble_summary(e.get(), &g);
        if (st == RR_OK) {
            entry["t1_gaussian"] = {{"mean_s", g.mean}, {"sigma_s", g.sigma}, {"count", g.count}};
            gaussians.push_back(g);
        } else {
            entry["t1_gaussian"] = nullptr;
            entry["summary_error"] = rr_last_error();
            status = kNumerical;
        }
        entry["spots"] = spots;
        summary["conditions"].push_back(entry);
        if (failed > 0 && status == kOk) status = kNumerical;
        std::printf("%-12s nominal T1 %s s", cond.name.c_str(), short_fmt(rr_ensemble_nominal_t1(e.get())).c_str());
        if (st == RR_OK)
            std::printf(", fitted %s +- %s s over %zu spots", short_fmt(g.mean).c_str(), short_fmt(g.sigma).c_str(),
                        g.count);
        if (failed) std::printf(", %zu fits failed", failed);
        std::printf("\n");
    }

    if (gaussians.size() == conditions.size() && conditions.size() >= 2) {
        ordered_json seps = ordered_json::array();
        for (size_t i = 0; i < conditions.size(); ++i)
            for (size_t k = i + 1; k < conditions.size(); ++k) {
                rr_separation z{};
                check(rr_separation_compute(&gaussians[i], &gaussians[k], &z), "separation");
                seps.push_back({{"a", conditions[i].name},
                                {"b", conditions[k].name},
                                {"delta_mean_s", gaussians[k].mean - gaussians[i].mean},
                                {"z_geometric", z.geometric},
                                {"z_pooled", z.pooled},
                                {"z_of_means", z.of_means}});
                std::printf("%s vs %s: z geometric %.3f, pooled %.3f, of means %.3f\n", conditions[i].name.c_str(),
                            conditions[k].name.c_str(), z.geometric, z.pooled, z.of_means);
            }
        summary["separations"] = seps;
    }

    write_text(dir / "summary.json", summary.dump(2) + "\n");
    outputs.push_back("summary.json");

    ordered_json manifest;
    manifest["tool"] = "rbmrelax";
    manifest["version"] = rr_version();
    manifest["command"] = "simulate";
    manifest["config"] = c.config.empty() ? "builtin-defaults" : c.config;
    manifest["config_hash"] = hash_of(base.get());
    manifest["seed"] = master;
    manifest["started_utc"] = started;
    manifest["finished_utc"] = utc_now();
    manifest["outputs"] = outputs;
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    return status;
}

int cmd_fit(const std::string& input, const std::string& out, std::optional<double> t1_guess) {
    rr_curve* raw = nullptr;
    check(rr_curve_read(input.c_str(), &raw), "fit");
    CurvePtr curve(raw);
    rr_fit fit{};
    std::optional<std::array<double, 3>> guess;
    if (t1_guess) {
        // baseline and amplitude from the data ends
        double tau = 0, first = 0, last = 0, se = 0;
        check(rr_curve_point(curve.get(), 0, &tau, &first, &se), "curve");
        check(rr_curve_point(curve.get(), rr_curve_size(curve.get()) - 1, &tau, &last, &se), "curve");
        guess = std::array<double, 3>{last, first - last, *t1_guess};
    }
    check(rr_fit_curve(curve.get(), guess ? guess->data() : nullptr, &fit), "fit");
    std::printf("T1 = %s +- %s s  (reduced chi^2 %s, %d iterations)%s\n", short_fmt(fit.t1).c_str(),
                short_fmt(fit.t1_stderr).c_str(), short_fmt(fit.reduced_chi_sq).c_str(), fit.iterations,
                fit.ill_conditioned ? "  [ill-conditioned]" : "");
    if (!out.empty()) check(rr_fit_write_json(&fit, out.c_str()), "fit output");
    if (!fit.converged) {
        std::fprintf(stderr, "fit did not converge: %s\n", fit.message);
        return kNumerical;
    }
    return kOk;
}

int cmd_sensitivity(const Common& c, const std::string& grid_spec) {
    auto s = load(c);
    std::vector<double> grid;
    if (!grid_spec.empty()) grid = parse_grid(grid_spec);
    rr_sensitivity* raw = nullptr;
    check(rr_sensitivity_compute(s.get(), grid.empty() ? nullptr : grid.data(), grid.size(), &raw), "sensitivity");
    SensitivityPtr curve(raw);
    for (size_t i = 0; i < rr_sensitivity_notice_count(curve.get()); ++i)
        std::fprintf(stderr, "notice: %s\n", rr_sensitivity_notice(curve.get(), i));
    rr_sensitivity_point grid_min{}, refined{};
    int boundary = 0;
    check(rr_sensitivity_minimum(curve.get(), &grid_min, &refined, &boundary), "sensitivity minimum");
    std::printf("minimum dR = %s 1/s at n = %s 1/m^3 (R_total = %s 1/s)\n", short_fmt(refined.delta_r_min).c_str(),
                short_fmt(refined.density).c_str(), short_fmt(refined.r_total).c_str());
    std::printf("grid minimum dR = %s 1/s at n = %s 1/m^3\n", short_fmt(grid_min.delta_r_min).c_str(),
                short_fmt(grid_min.density).c_str());
    if (!c.out.empty()) check(rr_sensitivity_write(curve.get(), c.out.c_str()), "sensitivity output");
    return kOk;
}

int cmd_oracle(const Common& c, const std::string& which) {
    rr_oracle_kind kind{};
    check(rr_oracle_from_name(which.c_str(), &kind), "oracle");
    auto s = load(c);
    int passed = 0;
    std::string report;
    std::string buf(1 << 16, '\0');
    size_t len = 0;
    rr_status st = rr_oracle_run(s.get(), kind, buf.data(), buf.size(), &len, &passed);
    if (st == RR_ERR_INVALID && len + 1 > buf.size()) {
        buf.assign(len + 1, '\0');
        st = rr_oracle_run(s.get(), kind, buf.data(), buf.size(), &len, &passed);
    }
    if (st != RR_OK && st != RR_ERR_ORACLE) check(st, "oracle " + which);
    buf.resize(len);
    std::cout << buf;
    if (!buf.empty() && buf.back() != '\n') std::cout << '\n';
    if (!c.out.empty()) write_text(c.out, buf);
    return passed ? kOk : kOracle;
}

int cmd_calibrate(const Common& c) {
    auto s = load(c);
    rr_calibration cal{};
    check(rr_calibrate(s.get(), &cal), "calibrate");
    std::string text;
    text += "[molecule]\nradius_nm = " + fmt(cal.molecule_radius * 1e9) + "\n\n";
    text += "[rates]\nvibrational_per_s = " + fmt(cal.r_vib) + "\n";
    text += "dipolar_coefficient_m3_per_s = " + fmt(cal.kappa_dip) + "\n\n";
    text += "[gd_bath]\ndensity_per_m3 = " + fmt(cal.optimal_density) + "\n\n";
    text += "[surface_bath]\ndensity_per_nm2 = " + fmt(cal.surface_density * 1e-18) + "\n";
    text += "correlation_time_s = " + fmt(cal.surface_tau_c) + "\n";
    text += "\n# background rate R0 = " + fmt(cal.background_rate) + " 1/s\n";
    std::cout << text;
    if (!c.out.empty()) write_text(c.out, text);
    return kOk;
}

void add_common(CLI::App* cmd, Common& c, bool with_out = true) {
    cmd->add_option("-c,--config", c.config, "Scenario file (defaults built in)")->check(CLI::ExistingFile);
    cmd->add_option("--set", c.overrides, "Override section.key=value (repeatable)");
    cmd->add_option("--seed", c.seed, "Master seed (overrides run.seed)");
    if (with_out) cmd->add_option("-o,--out", c.out, "Output path");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NV relaxometry forward model, measurement simulator and sensitivity analysis"};
    app.set_version_flag("--version", std::string(rr_version()));
    app.require_subcommand(1);

    Common common;
    auto* t1 = app.add_subcommand("t1", "Predict T1 with per-source rate attribution");
    add_common(t1, common);

    std::string axis, grid;
    auto* sweep = app.add_subcommand("sweep", "Sweep one parameter and write a CSV table");
    add_common(sweep, common);
    sweep->add_option("--axis", axis, "gd_density | water_fraction | diameter (SI units)")->required();
    sweep->add_option("--grid", grid, "lin:a:b:n, log:a:b:n or a comma list")->required();

    size_t spots = 40;
    std::vector<std::string> conditions;
    auto* simulate = app.add_subcommand("simulate", "Simulate and fit an ensemble of confocal spots");
    add_common(simulate, common);
    simulate->add_option("--spots", spots, "Spots per condition")->capture_default_str();
    simulate->add_option("--condition", conditions, "name:key=value,... (repeatable; default one nominal run)");

    std::string fit_in, fit_out;
    std::optional<double> fit_guess;
    auto* fit = app.add_subcommand("fit", "Fit a relaxation curve file");
    fit->add_option("input", fit_in, "Curve CSV (tau_s,signal,stderr)")->required()->check(CLI::ExistingFile);
    fit->add_option("-o,--out", fit_out, "FitResult JSON");
    fit->add_option("--t1-guess", fit_guess, "Initial T1 in seconds");

    std::string sens_grid;
    auto* sens = app.add_subcommand("sensitivity", "Sensitivity versus Gd density");
    add_common(sens, common);
    sens->add_option("--grid", sens_grid, "Density grid in 1/m^3 (default: 3 decades around the config)");

    std::string which;
    auto* oracle = app.add_subcommand("oracle", "Run a validation oracle");
    add_common(oracle, common);
    oracle->add_option("which", which, "bath_mc | sensitivity | quadrature")->required();

    auto* calibrate = app.add_subcommand("calibrate", "Re-derive the calibrated constants");
    add_common(calibrate, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kValidation;
    }

    try {
        if (*t1) return cmd_t1(common);
        if (*sweep) return cmd_sweep(common, axis, grid);
        if (*simulate) return cmd_simulate(common, spots, conditions);
        if (*fit) return cmd_fit(fit_in, fit_out, fit_guess);
        if (*sens) return cmd_sensitivity(common, sens_grid);
        if (*oracle) return cmd_oracle(common, which);
        if (*calibrate) return cmd_calibrate(common);
    } catch (const Failure& f) {
        std::fprintf(stderr, "error: %s\n", f.message.c_str());
        return f.code;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kValidation;
    }
    return kValidation;
}
