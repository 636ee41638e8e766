#include "rbm/hydro.hpp"

#include <cmath>
// Boost 1.74 pchip calls unqualified isnan on double.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>
#include <fstream>
#include <numbers>
#include <sstream>

#include "rbm/error.hpp"
#include "rbm/units.hpp"

namespace rbm {

using detail::require;

void HydroParams::validate() const {
    require(a > 0.0 && std::isfinite(a), "hydrodynamic radius must be positive");
    require(a_s >= 0.0 && std::isfinite(a_s), "solvent radius must be >= 0");
    require(eta > 0.0 && std::isfinite(eta), "viscosity must be positive");
    require(temperature > 0.0 && std::isfinite(temperature), "temperature must be positive");
}

double microviscosity_factor(double a, double a_s) {
    require(a > 0.0 && std::isfinite(a), "microviscosity_factor: a must be positive");
    require(a_s >= 0.0 && std::isfinite(a_s), "microviscosity_factor: a_s must be >= 0");
    const double ratio = a_s / a;
    const double shell = 1.0 + 2.0 * ratio;
    const double bracket = 6.0 * ratio + (1.0 + 3.0 * a_s / (a + 2.0 * a_s)) / (shell * shell * shell);
    return 1.0 / bracket;
}

double rbm_rate(const HydroParams& p, Microviscosity mode) {
    p.validate();
    const double f_r = mode == Microviscosity::Included ? microviscosity_factor(p.a, p.a_s) : 1.0;
    return constants::kBoltzmann * p.temperature /
           (8.0 * std::numbers::pi * p.a * p.a * p.a * p.eta * f_r);
}

double translational_diffusion(const HydroParams& p) {
    p.validate();
    return constants::kBoltzmann * p.temperature / (6.0 * std::numbers::pi * p.eta * p.a);
}

double translational_rate(const HydroParams& p, double length_scale) {
    require(length_scale > 0.0 && std::isfinite(length_scale), "length scale must be positive");
    return translational_diffusion(p) / (length_scale * length_scale);
}

// ---------------------------------------------------------------------------

struct SolventMixture::Interp {
    boost::math::interpolators::pchip<std::vector<double>> spline;
};

namespace {

void validate_table(const std::vector<ViscosityNode>& table) {
    require(table.size() >= 4, "viscosity table needs at least 4 nodes");
    require(table.front().mole_fraction == 0.0 && table.back().mole_fraction == 1.0,
            "viscosity table must cover mole fractions [0, 1]");
    for (std::size_t i = 0; i < table.size(); ++i) {
        require(table[i].viscosity > 0.0 && std::isfinite(table[i].viscosity),
                "viscosity table values must be positive");
        if (i > 0)
            require(table[i].mole_fraction > table[i - 1].mole_fraction,
                    "viscosity table must be strictly ascending in mole fraction");
    }
}

} // namespace

SolventMixture::SolventMixture(std::vector<ViscosityNode> table, double a_s_water, double a_s_other)
    : table_(std::move(table)), a_s_water_(a_s_water), a_s_other_(a_s_other) {
    validate_table(table_);
    require(a_s_water >= 0.0 && a_s_other >= 0.0, "solvent radii must be >= 0");
    std::vector<double> x, y;
    for (const auto& n : table_) {
        x.push_back(n.mole_fraction);
        y.push_back(n.viscosity);
    }
    interp_ = std::make_shared<const Interp>(Interp{{std::move(x), std::move(y)}});
}

std::vector<ViscosityNode> water_acetone_table() {
    // x_water, mPa s at 298 K. Keep in sync with data/water_acetone_298K.csv.
    static constexpr double rows[][2] = {
        {0.00, 0.306}, {0.10, 0.330}, {0.20, 0.360}, {0.30, 0.400}, {0.40, 0.450},
        {0.50, 0.520}, {0.60, 0.620}, {0.70, 0.780}, {0.80, 1.020}, {0.85, 1.150},
        {0.90, 1.220}, {0.95, 1.100}, {1.00, 0.890},
    };
    std::vector<ViscosityNode> out;
    for (const auto& r : rows) out.push_back({r[0], r[1] * 1e-3});
    return out;
}

SolventMixture SolventMixture::water_acetone() {
    return SolventMixture(water_acetone_table(), 0.14e-9, 0.25e-9);
}

std::vector<ViscosityNode> read_viscosity_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open solvent table: " + path.string());
    std::string line;
    std::size_t lineno = 0;
    std::vector<ViscosityNode> out;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        if (!header_seen) {
            header_seen = true;
            if (line.find("mole_fraction") == std::string::npos)
                throw ParseError("expected header 'mole_fraction,viscosity_mPa_s'", lineno);
            continue;
        }
        std::istringstream ss(line);
        double x = 0.0, eta = 0.0;
        char comma = 0;
        if (!(ss >> x >> comma >> eta) || comma != ',')
            throw ParseError("malformed solvent table row", lineno);
        std::string rest;
        if (ss >> rest) throw ParseError("trailing data in solvent table row", lineno);
        out.push_back({x, eta * 1e-3});
    }
    if (!header_seen) throw ParseError("empty solvent table", 0);
    try {
        validate_table(out);
    } catch (const ParameterError& e) {
        throw ParseError(path.string() + ": " + e.what(), 0);
    }
    return out;
}

SolventMixture SolventMixture::from_file(const std::filesystem::path& path, double a_s_water,
                                         double a_s_other) {
    return SolventMixture(read_viscosity_table(path), a_s_water, a_s_other);
}

double SolventMixture::viscosity(double x_water) const {
    require(x_water >= 0.0 && x_water <= 1.0, "water mole fraction must be in [0, 1]");
    for (const auto& n : table_)
        if (n.mole_fraction == x_water) return n.viscosity;
    return interp_->spline(x_water);
}

double SolventMixture::effective_radius(double x_water) const {
    require(x_water >= 0.0 && x_water <= 1.0, "water mole fraction must be in [0, 1]");
    return x_water * a_s_water_ + (1.0 - x_water) * a_s_other_;
}

double mixture_viscosity(const SolventMixture& m, double x_water) { return m.viscosity(x_water); }

double effective_solvent_radius(const SolventMixture& m, double x_water) {
    return m.effective_radius(x_water);
}

RateBreakdown total_rate(double r_dip, double r_vib, double r_trans, double r_rot) {
    for (double r : {r_dip, r_vib, r_trans, r_rot})
        require(r >= 0.0 && std::isfinite(r), "rate components must be finite and >= 0");
    return {r_dip, r_vib, r_trans, r_rot, r_dip + r_vib + r_trans + r_rot};
}

} // namespace rbm
