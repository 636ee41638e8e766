#include "rbm/relax.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "rbm/error.hpp"

namespace rbm {

void NoiseSource::validate() const {
    using detail::require;
    require(std::isfinite(b_perp_sq) && b_perp_sq >= 0.0,
            "noise source '" + label + "': b_perp_sq must be finite and >= 0");
    require(std::isfinite(gamma) && gamma != 0.0, "noise source '" + label + "': gamma must be nonzero");
    require(std::isfinite(tau_c) && tau_c >= kMinCorrelationTime && tau_c <= kMaxCorrelationTime,
            "noise source '" + label + "': tau_c outside [1e-15, 1e3] s");
}

NoiseSource NoiseSource::from_rate(std::string label, double gamma, double b_perp_sq,
                                   double fluctuation_rate) {
    detail::require(fluctuation_rate > 0.0 && std::isfinite(fluctuation_rate),
                    "fluctuation rate must be positive");
    NoiseSource s{std::move(label), gamma, b_perp_sq, 1.0 / fluctuation_rate};
    s.validate();
    return s;
}

double lorentzian_psd(const NoiseSource& source, AngularFrequency omega) {
    source.validate();
    const double wt = omega.value * source.tau_c;
    return source.b_perp_sq * 2.0 * source.tau_c / (1.0 + wt * wt);
}

double rate_contribution(const NoiseSource& source, AngularFrequency omega0) {
    source.validate();
    const double wt = omega0.value * source.tau_c;
    return 3.0 * source.gamma * source.gamma * source.b_perp_sq * source.tau_c / (1.0 + wt * wt);
}

RelaxationResult t1_total(std::span<const NoiseSource> sources, double t1_bulk,
                          AngularFrequency omega0) {
    detail::require(t1_bulk > 0.0 && std::isfinite(t1_bulk), "t1_bulk must be positive");
    RelaxationResult out;
    out.rate_bulk = 1.0 / t1_bulk;
    out.rate_total = out.rate_bulk;
    out.per_source_rates.reserve(sources.size());
    for (const auto& s : sources) {
        const double r = rate_contribution(s, omega0);
        out.per_source_rates.push_back({s.label, r});
        out.rate_total += r;
    }
    out.t1 = 1.0 / out.rate_total;
    return out;
}

std::vector<NarrowingPoint> motional_narrowing_curve(const NoiseSource& source_template,
                                                     AngularFrequency omega0,
                                                     std::span<const double> rate_grid) {
    detail::require(std::is_sorted(rate_grid.begin(), rate_grid.end()), "rate grid must be sorted ascending");
    std::vector<NarrowingPoint> out;
    out.reserve(rate_grid.size());
    for (double r : rate_grid) {
        detail::require(r > 0.0, "rates must be positive");
        NoiseSource s = source_template;
        s.tau_c = 1.0 / r;
        out.push_back({r, rate_contribution(s, omega0)});
    }
    return out;
}

} // namespace rbm
