#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rbm/bath.hpp"
#include "rbm/hydro.hpp"
#include "rbm/measure.hpp"
#include "rbm/sensitivity.hpp"

namespace rbm {

struct SolventConfig {
    double x_water = 1.0;
    std::optional<std::string> viscosity_table; // path; built-in water/acetone table if absent
    double a_s_water = 0.14e-9;                 // m
    double a_s_other = 0.25e-9;                 // m
    bool microviscosity = true;
};

struct MeasurementConfig {
    std::optional<std::vector<double>> dark_times; // s; automatic grid if absent
    std::uint64_t shots_per_point = 1'000'000;
    double detection_window = 500e-9;
    double photon_rate = 1e5;
    double contrast = 0.2;
    bool include_reference = true;
    double acquisition_time = 10.0;
};

struct EnsembleConfig {
    double density_rel_spread = 0.0;
    double diameter_rel_spread = 0.0;
};

/// Complete physical and numerical configuration of one run.
struct Scenario {
    ParticleGeometry particle;
    SurfaceBath surface;
    double surface_tau_c = 0.0; // s
    VolumeBath gd;
    double molecule_radius = 0.0;    // m, Gd-DOTA hydrodynamic radius
    double r_vib = 0.0;              // 1/s
    double kappa_dip = 0.0;          // m^3/s, R_dip = kappa_dip * n
    std::optional<double> trans_length; // m; r0 + standoff if absent
    SolventConfig solvent;
    double temperature = 298.15; // K
    double t1_bulk = 3e-3;       // s
    double omega0 = kNvOmega0.value;
    MeasurementConfig measurement;
    EnsembleConfig ensemble;
    std::uint64_t seed = 20190101;
    std::uint64_t mc_samples = 1'000'000;

    /// Directory that relative file references resolve against.
    std::filesystem::path base_dir;

    /// Shipped calibrated defaults (see config/default.ini for derivations).
    static Scenario defaults();

    void validate() const;
    SolventMixture mixture() const;
    double translational_length() const;
    MeasurementPlan plan(double expected_t1) const;
    SensitivityInputs sensitivity_inputs() const;

    /// Override one value by its `section.key` name, with the same parsing
    /// and units as the config file.
    void set(const std::string& dotted_key, const std::string& value);
    std::string get(const std::string& dotted_key) const;
    static std::vector<std::string> keys();
};

/// Strict INI-style parser: `[section]` headers, `key = value` lines, `#` or
/// `;` comments. Unknown sections or keys, duplicates and bad values are
/// ParseErrors carrying the line number. Keys absent from the text keep
/// their shipped defaults.
Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

/// Canonical text: every key in a fixed order, 15 significant digits so that
/// unit conversions round-trip exactly.
std::string serialize_scenario(const Scenario& s);

/// SHA-256 of the canonical text; independent of key order in the source file.
std::string scenario_hash(const Scenario& s);

bool equivalent(const Scenario& a, const Scenario& b);

} // namespace rbm
