#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <vector>

namespace rbm {

/// Inputs to the rotational and translational Stokes-Einstein rates.
struct HydroParams {
    double a = 0.0;             // m, hydrodynamic radius of the tracked molecule
    double a_s = 0.0;           // m, solvent molecular radius
    double eta = 0.0;           // Pa s
    double temperature = 298.15; // K

    void validate() const;
};

enum class Microviscosity { Included, Neglected };

/// f_r = [6 a_s/a + (1 + 3 a_s/(a + 2 a_s)) / (1 + 2 a_s/a)^3]^-1, in (0, 1].
double microviscosity_factor(double a, double a_s);

/// R_rot = k_B T / (8 pi a^3 eta f_r).
double rbm_rate(const HydroParams& p, Microviscosity mode = Microviscosity::Included);

/// R_trans = D_t / L^2 with D_t = k_B T / (6 pi eta a).
double translational_diffusion(const HydroParams& p);
double translational_rate(const HydroParams& p, double length_scale);

struct ViscosityNode {
    double mole_fraction = 0.0; // water mole fraction
    double viscosity = 0.0;     // Pa s
};

/// Binary water/co-solvent mixture described by a tabulated viscosity curve.
/// Interpolation is monotone piecewise cubic (PCHIP), so it passes through
/// every node and never overshoots the neighbouring node values.
class SolventMixture {
public:
    SolventMixture(std::vector<ViscosityNode> table, double a_s_water, double a_s_other);

    /// Water-acetone at 298 K, handbook-style reference values.
    static SolventMixture water_acetone();
    /// Reads `mole_fraction,viscosity_mPa_s` rows (one header line).
    static SolventMixture from_file(const std::filesystem::path& path, double a_s_water,
                                    double a_s_other);

    double viscosity(double x_water) const;
    double effective_radius(double x_water) const;

    const std::vector<ViscosityNode>& table() const { return table_; }
    double a_s_water() const { return a_s_water_; }
    double a_s_other() const { return a_s_other_; }

private:
    struct Interp;
    std::vector<ViscosityNode> table_;
    double a_s_water_;
    double a_s_other_;
    std::shared_ptr<const Interp> interp_;
};

std::vector<ViscosityNode> read_viscosity_table(const std::filesystem::path& path);
std::vector<ViscosityNode> water_acetone_table();

double mixture_viscosity(const SolventMixture& m, double x_water);
double effective_solvent_radius(const SolventMixture& m, double x_water);

/// The four fluctuation-rate channels of a Gd(III) molecule and their sum.
struct RateBreakdown {
    double r_dip = 0.0;
    double r_vib = 0.0;
    double r_trans = 0.0;
    double r_rot = 0.0;
    double r_total = 0.0;
};

RateBreakdown total_rate(double r_dip, double r_vib, double r_trans, double r_rot);

} // namespace rbm
