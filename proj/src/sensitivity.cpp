#include "rbm/sensitivity.hpp"

#include <boost/math/tools/minima.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>

#include "rbm/error.hpp"
#include "rbm/measure.hpp"

namespace rbm {

using detail::require;

void SensitivityInputs::validate() const {
    require(contrast > 0.0 && contrast < 1.0, "contrast must be in (0, 1)");
    require(photon_rate > 0.0, "photon rate must be positive");
    require(detection_window > 0.0, "detection window must be positive");
    require(acquisition_time > 0.0, "acquisition time must be positive");
    require(gamma_e != 0.0, "gamma must be nonzero");
    require(b_perp_sq > 0.0, "B_perp^2 must be positive");
    require(r_total > 0.0, "total rate must be positive");
    require(omega0 > 0.0, "omega0 must be positive");
}

double delta_r_min(const SensitivityInputs& inp) {
    inp.validate();
    const double r = inp.r_total;
    const double w = inp.omega0;
    const double r2 = r * r, w2 = w * w;
    if (r2 == w2) throw SingularityError("R equals omega0: sensor is insensitive to rate changes");
    const double coupling = 3.0 * inp.gamma_e * inp.gamma_e * inp.b_perp_sq;
    const double readout = 1.0 / (inp.contrast * std::sqrt(inp.photon_rate * inp.detection_window * inp.acquisition_time));
    return readout * std::sqrt(2.0 * std::numbers::e * r / coupling) * std::pow(r2 + w2, 1.5) /
           std::abs(r2 - w2);
}

OracleReadout delta_r_oracle(const SensitivityInputs& inp, double perturbation) {
    inp.validate();
    require(perturbation > 0.0 && perturbation <= 0.01 * inp.r_total,
            "perturbation must be positive and <= 1% of R");
    const double coupling = 3.0 * inp.gamma_e * inp.gamma_e * inp.b_perp_sq;
    const double w2 = inp.omega0 * inp.omega0;
    auto relax_rate = [&](double r) { return coupling * r / (r * r + w2); };
    auto signal = [&](double tau, double r) { return expected_signal(tau, 1.0 / relax_rate(r), inp.contrast); };

    const double r = inp.r_total;
    const double gamma0 = relax_rate(r);
    const double dgamma = (relax_rate(r + perturbation) - relax_rate(r - perturbation)) / (2.0 * perturbation);
    if (std::abs(dgamma) * r / gamma0 < 1e-6)
        throw SingularityError("d(signal)/dR vanishes: R is at the Lorentzian peak omega0");

    const double counts_per_shot = inp.photon_rate * inp.detection_window;
    // Each shot takes one dark time; readout and repolarisation are negligible.
    auto delta_at = [&](double tau) {
        const double slope = (signal(tau, r + perturbation) - signal(tau, r - perturbation)) / (2.0 * perturbation);
        const double shot_noise = std::sqrt(signal(tau, r) / counts_per_shot);
        const double shots = inp.acquisition_time / tau;
        return shot_noise / std::sqrt(shots) / std::abs(slope);
    };

    boost::uintmax_t iters = 200;
    const auto best = boost::math::tools::brent_find_minima(
        [&](double log_tau) { return delta_at(std::exp(log_tau)); }, std::log(1e-3 / gamma0),
        std::log(1e2 / gamma0), 40, iters);
    OracleReadout out;
    out.dark_time = std::exp(best.first);
    out.delta_r = best.second;
    out.slope = (signal(out.dark_time, r + perturbation) - signal(out.dark_time, r - perturbation)) / (2.0 * perturbation);
    return out;
}

SensitivityCurve optimize_density(const DensityModel& model, std::span<const double> density_grid,
                                  const SensitivityInputs& fixed) {
    require(density_grid.size() >= 3, "density grid needs at least 3 points");
    require(std::is_sorted(density_grid.begin(), density_grid.end()), "density grid must be ascending");
    require(density_grid.front() > 0.0, "densities must be positive");
    require(density_grid.back() / density_grid.front() >= 100.0 * (1.0 - 1e-12), "density grid must span at least 2 decades");

    auto evaluate = [&](double n) {
        const BathAtDensity bath = model(n);
        SensitivityInputs inp = fixed;
        inp.b_perp_sq = bath.b_perp_sq;
        inp.r_total = bath.r_total;
        return SensitivityPoint{n, bath.r_total, bath.b_perp_sq, delta_r_min(inp)};
    };

    SensitivityCurve curve;
    for (double n : density_grid) {
        try {
            curve.points.push_back(evaluate(n));
        } catch (const SingularityError&) {
            curve.notices.push_back("skipped density " + format_double(n) + ": R_total equals omega0");
        }
    }
    if (curve.points.empty()) throw NumericalError("no evaluable points on the density grid");

    const auto it = std::min_element(curve.points.begin(), curve.points.end(),
                                     [](const auto& a, const auto& b) { return a.delta_r_min < b.delta_r_min; });
    curve.argmin = static_cast<std::size_t>(it - curve.points.begin());
    curve.refined = *it;
    const std::size_t last = curve.points.size() - 1;
    curve.boundary_warning = curve.argmin == 0 || curve.argmin == last;
    if (!curve.boundary_warning) {
        const double lo = std::log(curve.points[curve.argmin - 1].density);
        const double hi = std::log(curve.points[curve.argmin + 1].density);
        boost::uintmax_t iters = 200;
        try {
            const auto best = boost::math::tools::brent_find_minima(
                [&](double log_n) { return evaluate(std::exp(log_n)).delta_r_min; }, lo, hi, 40, iters);
            if (best.second <= curve.refined.delta_r_min) curve.refined = evaluate(std::exp(best.first));
        } catch (const SingularityError&) {
            // keep the grid minimum
        }
    } else {
        curve.notices.push_back("minimum on grid boundary; widen the density grid");
    }
    return curve;
}

std::vector<double> log_grid(double centre, double decades, int per_decade) {
    require(centre > 0.0 && decades > 0.0 && per_decade > 0, "invalid log grid");
    const int count = static_cast<int>(std::lround(decades * per_decade)) + 1;
    const double lo = std::log10(centre) - 0.5 * decades;
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = std::pow(10.0, lo + i / static_cast<double>(per_decade));
    return out;
}

void write_sensitivity_curve(std::ostream& out, const SensitivityCurve& curve) {
    out << "density_m3,r_total_per_s,delta_r_min_per_s\n";
    for (const auto& p : curve.points)
        out << format_double(p.density) << ',' << format_double(p.r_total) << ',' << format_double(p.delta_r_min) << '\n';
    const auto& g = curve.points[curve.argmin];
    out << "# argmin_grid_density_m3=" << format_double(g.density) << '\n'
        << "# argmin_grid_r_total_per_s=" << format_double(g.r_total) << '\n'
        << "# argmin_grid_delta_r_min_per_s=" << format_double(g.delta_r_min) << '\n'
        << "# refined_density_m3=" << format_double(curve.refined.density) << '\n'
        << "# refined_r_total_per_s=" << format_double(curve.refined.r_total) << '\n'
        << "# refined_delta_r_min_per_s=" << format_double(curve.refined.delta_r_min) << '\n'
        << "# boundary_warning=" << (curve.boundary_warning ? "true" : "false") << '\n';
    for (const auto& n : curve.notices) out << "# notice: " << n << '\n';
}

void write_sensitivity_curve(const std::filesystem::path& path, const SensitivityCurve& curve) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write sensitivity file: " + path.string());
    write_sensitivity_curve(out, curve);
}

} // namespace rbm
