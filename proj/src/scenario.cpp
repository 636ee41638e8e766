#include "rbm/scenario.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "rbm/error.hpp"
#include "rbm/relax.hpp"

namespace rbm {

using detail::require;

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double parse_double(std::string_view v) {
    const std::string t = trim(v);
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
        throw ParameterError("expected a number, got '" + t + "'");
    return out;
}

std::uint64_t parse_uint(std::string_view v) {
    const std::string t = trim(v);
    // Accept integral values written in exponent form, e.g. 1e6.
    const double d = parse_double(t);
    if (!(d >= 0.0) || d != std::floor(d) || d > 1.8e19)
        throw ParameterError("expected a non-negative integer, got '" + t + "'");
    return static_cast<std::uint64_t>(d);
}

bool parse_bool(std::string_view v) {
    std::string t = trim(v);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
    if (t == "false" || t == "no" || t == "off" || t == "0") return false;
    throw ParameterError("expected a boolean, got '" + t + "'");
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

struct Field {
    std::string section;
    std::string key;
    std::function<void(Scenario&, std::string_view)> set;
    std::function<std::string(const Scenario&)> get;
};

template <class Access>
Field number(std::string section, std::string key, Access access, double unit = 1.0) {
    return {std::move(section), std::move(key),
            [access, unit](Scenario& s, std::string_view v) { access(s) = parse_double(v) * unit; },
            [access, unit](const Scenario& s) { return fmt(access(const_cast<Scenario&>(s)) / unit); }};
}

template <class Access>
Field integer(std::string section, std::string key, Access access) {
    return {std::move(section), std::move(key),
            [access](Scenario& s, std::string_view v) { access(s) = parse_uint(v); },
            [access](const Scenario& s) { return std::to_string(access(const_cast<Scenario&>(s))); }};
}

template <class Access>
Field boolean(std::string section, std::string key, Access access) {
    return {std::move(section), std::move(key),
            [access](Scenario& s, std::string_view v) { access(s) = parse_bool(v); },
            [access](const Scenario& s) { return std::string(access(const_cast<Scenario&>(s)) ? "true" : "false"); }};
}

const std::vector<Field>& fields() {
    constexpr double nm = kNanometre;
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        f.push_back(number("particle", "diameter_nm", [](Scenario& s) -> double& { return s.particle.diameter; }, nm));
        f.push_back(number("particle", "sensor_offset_nm", [](Scenario& s) -> double& { return s.particle.sensor_offset; }, nm));

        f.push_back(number("surface_bath", "density_per_nm2", [](Scenario& s) -> double& { return s.surface.areal_density; }, 1.0 / (nm * nm)));
        f.push_back(number("surface_bath", "spin", [](Scenario& s) -> double& { return s.surface.spin; }));
        f.push_back(number("surface_bath", "gamma_rad_per_s_T", [](Scenario& s) -> double& { return s.surface.gamma; }));
        f.push_back(number("surface_bath", "correlation_time_s", [](Scenario& s) -> double& { return s.surface_tau_c; }));

        f.push_back(number("gd_bath", "density_per_m3", [](Scenario& s) -> double& { return s.gd.number_density; }));
        f.push_back(number("gd_bath", "spin", [](Scenario& s) -> double& { return s.gd.spin; }));
        f.push_back(number("gd_bath", "gamma_rad_per_s_T", [](Scenario& s) -> double& { return s.gd.gamma; }));
        f.push_back(number("gd_bath", "standoff_nm", [](Scenario& s) -> double& { return s.gd.standoff; }, nm));

        f.push_back(number("molecule", "radius_nm", [](Scenario& s) -> double& { return s.molecule_radius; }, nm));

        f.push_back(number("rates", "vibrational_per_s", [](Scenario& s) -> double& { return s.r_vib; }));
        f.push_back(number("rates", "dipolar_coefficient_m3_per_s", [](Scenario& s) -> double& { return s.kappa_dip; }));
        f.push_back({"rates", "translational_length_nm",
                     [](Scenario& s, std::string_view v) {
                         if (trim(v) == "auto") s.trans_length.reset();
                         else s.trans_length = parse_double(v) * kNanometre;
                     },
                     [](const Scenario& s) { return s.trans_length ? fmt(*s.trans_length / kNanometre) : std::string("auto"); }});

        f.push_back(number("solvent", "x_water", [](Scenario& s) -> double& { return s.solvent.x_water; }));
        f.push_back({"solvent", "viscosity_table",
                     [](Scenario& s, std::string_view v) {
                         const auto t = trim(v);
                         if (t == "builtin") s.solvent.viscosity_table.reset();
                         else s.solvent.viscosity_table = t;
                     },
                     [](const Scenario& s) { return s.solvent.viscosity_table.value_or("builtin"); }});
        f.push_back(number("solvent", "a_s_water_nm", [](Scenario& s) -> double& { return s.solvent.a_s_water; }, nm));
        f.push_back(number("solvent", "a_s_other_nm", [](Scenario& s) -> double& { return s.solvent.a_s_other; }, nm));
        f.push_back(boolean("solvent", "microviscosity", [](Scenario& s) -> bool& { return s.solvent.microviscosity; }));

        f.push_back(number("environment", "temperature_K", [](Scenario& s) -> double& { return s.temperature; }));
        f.push_back(number("environment", "t1_bulk_s", [](Scenario& s) -> double& { return s.t1_bulk; }));
        f.push_back(number("environment", "splitting_GHz", [](Scenario& s) -> double& { return s.omega0; }, kTwoPi * 1e9));

        f.push_back({"measurement", "dark_times_s",
                     [](Scenario& s, std::string_view v) {
                         const auto t = trim(v);
                         if (t == "auto") {
                             s.measurement.dark_times.reset();
                             return;
                         }
                         std::vector<double> out;
                         std::stringstream ss(t);
                         std::string item;
                         while (std::getline(ss, item, ',')) out.push_back(parse_double(item));
                         s.measurement.dark_times = out;
                     },
                     [](const Scenario& s) {
                         if (!s.measurement.dark_times) return std::string("auto");
                         std::string out;
                         for (double d : *s.measurement.dark_times) out += (out.empty() ? "" : ", ") + fmt(d);
                         return out;
                     }});
        f.push_back(integer("measurement", "shots_per_point", [](Scenario& s) -> std::uint64_t& { return s.measurement.shots_per_point; }));
        f.push_back(number("measurement", "detection_window_s", [](Scenario& s) -> double& { return s.measurement.detection_window; }));
        f.push_back(number("measurement", "photon_rate_per_s", [](Scenario& s) -> double& { return s.measurement.photon_rate; }));
        f.push_back(number("measurement", "contrast", [](Scenario& s) -> double& { return s.measurement.contrast; }));
        f.push_back(boolean("measurement", "include_reference", [](Scenario& s) -> bool& { return s.measurement.include_reference; }));
        f.push_back(number("measurement", "acquisition_time_s", [](Scenario& s) -> double& { return s.measurement.acquisition_time; }));

        f.push_back(number("ensemble", "density_rel_spread", [](Scenario& s) -> double& { return s.ensemble.density_rel_spread; }));
        f.push_back(number("ensemble", "diameter_rel_spread", [](Scenario& s) -> double& { return s.ensemble.diameter_rel_spread; }));

        f.push_back(integer("run", "seed", [](Scenario& s) -> std::uint64_t& { return s.seed; }));
        f.push_back(integer("run", "mc_samples", [](Scenario& s) -> std::uint64_t& { return s.mc_samples; }));
        return f;
    }();
    return table;
}

const Field* find_field(const std::string& section, const std::string& key) {
    for (const auto& f : fields())
        if (f.section == section && f.key == key) return &f;
    return nullptr;
}

} // namespace

// ---------------------------------------------------------------------------

Scenario Scenario::defaults() {
    // Calibrated constants; derivations in config/default.ini and
    // rbm::calibrate(). tests/test_calibration.cpp re-derives them.
    Scenario s;
    s.particle.diameter = 25e-9;
    s.surface.areal_density = 1.607560535e18;
    s.surface.spin = 0.5;
    s.surface_tau_c = 5.54546840041e-11;
    s.gd.number_density = 6.894758624e25;
    s.gd.spin = 3.5;
    s.molecule_radius = 0.4961368849e-9;
    s.r_vib = 2.852882566e10;
    s.kappa_dip = 4.134780044e-16;
    s.ensemble.density_rel_spread = 0.15;
    s.ensemble.diameter_rel_spread = 0.02;
    return s;
}

void Scenario::validate() const {
    particle.validate();
    surface.validate();
    gd.validate();
    require(surface_tau_c >= kMinCorrelationTime && surface_tau_c <= kMaxCorrelationTime,
            "surface_bath.correlation_time_s outside [1e-15, 1e3] s");
    require(molecule_radius > 0.0, "molecule.radius_nm must be positive");
    require(r_vib >= 0.0 && std::isfinite(r_vib), "rates.vibrational_per_s must be >= 0");
    require(kappa_dip >= 0.0 && std::isfinite(kappa_dip), "rates.dipolar_coefficient_m3_per_s must be >= 0");
    if (trans_length) require(*trans_length > 0.0, "rates.translational_length_nm must be positive");
    require(solvent.x_water >= 0.0 && solvent.x_water <= 1.0, "solvent.x_water must be in [0, 1]");
    require(solvent.a_s_water >= 0.0 && solvent.a_s_other >= 0.0, "solvent radii must be >= 0");
    if (solvent.viscosity_table) {
        const auto p = base_dir / *solvent.viscosity_table;
        require(std::filesystem::exists(p), "solvent.viscosity_table not found: " + p.string());
    }
    require(temperature > 0.0, "environment.temperature_K must be positive");
    require(t1_bulk > 0.0, "environment.t1_bulk_s must be positive");
    require(omega0 > 0.0, "environment.splitting_GHz must be positive");
    const auto& m = measurement;
    if (m.dark_times) {
        require(m.dark_times->size() >= 4, "measurement.dark_times_s needs at least 4 values");
        require(std::is_sorted(m.dark_times->begin(), m.dark_times->end()), "measurement.dark_times_s must be ascending");
        require(m.dark_times->front() >= 0.0, "measurement.dark_times_s must be >= 0");
    }
    require(m.shots_per_point >= 1, "measurement.shots_per_point must be >= 1");
    require(m.detection_window > 0.0, "measurement.detection_window_s must be positive");
    require(m.photon_rate > 0.0, "measurement.photon_rate_per_s must be positive");
    require(m.contrast > 0.0 && m.contrast < 1.0, "measurement.contrast must be in (0, 1)");
    require(m.acquisition_time > 0.0, "measurement.acquisition_time_s must be positive");
    require(ensemble.density_rel_spread >= 0.0 && ensemble.density_rel_spread < 1.0,
            "ensemble.density_rel_spread must be in [0, 1)");
    require(ensemble.diameter_rel_spread >= 0.0 && ensemble.diameter_rel_spread < 1.0,
            "ensemble.diameter_rel_spread must be in [0, 1)");
    require(mc_samples >= 10'000, "run.mc_samples must be >= 1e4");
}

SolventMixture Scenario::mixture() const {
    if (solvent.viscosity_table)
        return SolventMixture::from_file(base_dir / *solvent.viscosity_table, solvent.a_s_water, solvent.a_s_other);
    return SolventMixture(water_acetone_table(), solvent.a_s_water, solvent.a_s_other);
}

double Scenario::translational_length() const {
    return trans_length ? *trans_length : particle.radius() + gd.standoff;
}

MeasurementPlan Scenario::plan(double expected_t1) const {
    MeasurementPlan p;
    p.dark_times = measurement.dark_times ? *measurement.dark_times : MeasurementPlan::default_dark_times(expected_t1);
    p.shots_per_point = measurement.shots_per_point;
    p.detection_window = measurement.detection_window;
    p.photon_rate = measurement.photon_rate;
    p.contrast = measurement.contrast;
    p.include_reference = measurement.include_reference;
    return p;
}

SensitivityInputs Scenario::sensitivity_inputs() const {
    SensitivityInputs in;
    in.contrast = measurement.contrast;
    in.photon_rate = measurement.photon_rate;
    in.detection_window = measurement.detection_window;
    in.acquisition_time = measurement.acquisition_time;
    in.gamma_e = gd.gamma;
    in.omega0 = omega0;
    return in;
}

void Scenario::set(const std::string& dotted_key, const std::string& value) {
    const auto dot = dotted_key.find('.');
    const Field* f = dot == std::string::npos ? nullptr : find_field(dotted_key.substr(0, dot), dotted_key.substr(dot + 1));
    if (!f) throw ParameterError("unknown config key '" + dotted_key + "'");
    try {
        f->set(*this, value);
    } catch (const ParameterError& e) {
        throw ParameterError(dotted_key + ": " + e.what());
    }
}

std::string Scenario::get(const std::string& dotted_key) const {
    const auto dot = dotted_key.find('.');
    const Field* f = dot == std::string::npos ? nullptr : find_field(dotted_key.substr(0, dot), dotted_key.substr(dot + 1));
    if (!f) throw ParameterError("unknown config key '" + dotted_key + "'");
    return f->get(*this);
}

std::vector<std::string> Scenario::keys() {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.push_back(f.section + "." + f.key);
    return out;
}

Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir) {
    Scenario s = Scenario::defaults();
    s.base_dir = base_dir;
    std::istringstream in(text);
    std::string raw, section;
    std::set<std::string> known_sections;
    for (const auto& f : fields()) known_sections.insert(f.section);
    std::set<std::string> seen;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError("malformed section header", lineno);
            section = trim(line.substr(1, line.size() - 2));
            if (!known_sections.count(section)) throw ParseError("unknown section [" + section + "]", lineno);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) throw ParseError("key '" + key + "' outside any section", lineno);
        const Field* f = find_field(section, key);
        if (!f) throw ParseError("unknown key '" + key + "' in [" + section + "]", lineno);
        if (!seen.insert(section + "." + key).second)
            throw ParseError("duplicate key '" + section + "." + key + "'", lineno);
        try {
            f->set(s, value);
        } catch (const ParameterError& e) {
            throw ParseError(section + "." + key + ": " + e.what(), lineno);
        }
    }
    s.validate();
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_scenario(buf.str(), path.parent_path());
    } catch (const ParseError& e) {
        throw ParseError(e.message() + " (" + path.string() + ")", e.line());
    }
}

std::string serialize_scenario(const Scenario& s) {
    std::string out, section;
    for (const auto& f : fields()) {
        if (f.section != section) {
            if (!section.empty()) out += '\n';
            section = f.section;
            out += "[" + section + "]\n";
        }
        out += f.key + " = " + f.get(s) + "\n";
    }
    return out;
}

std::string scenario_hash(const Scenario& s) {
    const std::string text = serialize_scenario(s);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

bool equivalent(const Scenario& a, const Scenario& b) {
    return serialize_scenario(a) == serialize_scenario(b);
}

} // namespace rbm
