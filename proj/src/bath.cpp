#include "rbm/bath.hpp"

#include <boost/math/tools/minima.hpp>
#include <array>
#include <cmath>
#include <future>
#include <numbers>

#include "rbm/error.hpp"
#include "rbm/relax.hpp"
#include "rbm/rng.hpp"

namespace rbm {

using detail::require;

namespace {

bool valid_spin(double s) {
    const double twice = 2.0 * s;
    return s > 0.0 && std::abs(twice - std::round(twice)) < 1e-12;
}

constexpr double kPi = std::numbers::pi;

} // namespace

void ParticleGeometry::validate() const {
    require(diameter > 0.0 && std::isfinite(diameter), "particle diameter must be positive");
    require(std::abs(sensor_offset) < 0.5 * diameter, "sensor offset must lie inside the particle");
}

void SurfaceBath::validate() const {
    require(areal_density >= 0.0 && std::isfinite(areal_density), "surface density must be >= 0");
    require(valid_spin(spin), "surface spin must be a positive half-integer");
    require(gamma != 0.0 && std::isfinite(gamma), "surface gamma must be nonzero");
}

void VolumeBath::validate() const {
    require(number_density >= 0.0 && std::isfinite(number_density), "number density must be >= 0");
    require(valid_spin(spin), "molecular spin must be a positive half-integer");
    require(gamma != 0.0 && std::isfinite(gamma), "molecular gamma must be nonzero");
    require(standoff >= 0.0 && std::isfinite(standoff), "standoff must be >= 0");
}

double dipolar_prefactor(double gamma, double spin) {
    const double m = constants::kMu0Over4Pi * gamma * constants::kHbar;
    return m * m * spin * (spin + 1.0);
}

double b_perp_sq_surface(const ParticleGeometry& g, const SurfaceBath& bath) {
    g.validate();
    bath.validate();
    require(g.sensor_offset == 0.0, "closed form needs a centred sensor; use b_perp_mc");
    const double r0 = g.radius();
    const double a_s = dipolar_prefactor(bath.gamma, bath.spin) * kTransverseGeometricFactor * 4.0 * kPi;
    return a_s * bath.areal_density / (r0 * r0 * r0 * r0);
}

double b_perp_sq_volume(const ParticleGeometry& g, const VolumeBath& bath) {
    g.validate();
    bath.validate();
    require(g.sensor_offset == 0.0, "closed form needs a centred sensor; use b_perp_mc");
    const double r = g.radius() + bath.standoff;
    const double a_v =
        dipolar_prefactor(bath.gamma, bath.spin) * kTransverseGeometricFactor * 4.0 * kPi / 3.0;
    return a_v * bath.number_density / (r * r * r);
}

// ---------------------------------------------------------------------------
// Monte Carlo

namespace {

using Vec3 = std::array<double, 3>;

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 random_direction(Engine& rng, std::uniform_real_distribution<double>& u) {
    const double z = 2.0 * u(rng) - 1.0;
    const double phi = 2.0 * kPi * u(rng);
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {rho * std::cos(phi), rho * std::sin(phi), z};
}

struct Moments {
    std::uint64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    void merge(const Moments& o) {
        if (o.n == 0) return;
        const auto total = n + o.n;
        const double d = o.mean - mean;
        mean += d * static_cast<double>(o.n) / static_cast<double>(total);
        m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / static_cast<double>(total);
        n = total;
    }
};

// Per-sample estimator: weight * (transverse field^2 of one randomly placed,
// randomly oriented spin along a random sensor axis).
//
// Surface: weight = number of spins. Volume: 1/r is drawn uniformly, so the
// weight is n 4 pi r^4 (1/r_in - 1/r_out); a uniform-in-volume draw would make
// the r^-6 kernel so heavy-tailed that the sample variance is unreliable.
struct SampleSpec {
    bool surface = true;
    double r_inner = 0.0;
    double r_outer = 0.0;
    double weight = 0.0;
    double moment = 0.0; // (mu0/4pi) gamma hbar sqrt(S(S+1))
    Vec3 sensor{};
};

Moments run_chunk(const SampleSpec& spec, std::uint64_t samples, std::uint64_t seed) {
    Engine rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Moments acc;
    const double inv_in = 1.0 / spec.r_inner;
    const double inv_out = spec.surface ? inv_in : 1.0 / spec.r_outer;
    for (std::uint64_t i = 0; i < samples; ++i) {
        const Vec3 dir = random_direction(rng, u);
        double r = spec.r_inner;
        double w = spec.weight;
        if (!spec.surface) {
            r = 1.0 / (inv_out + u(rng) * (inv_in - inv_out));
            w *= r * r * r * r;
        }
        const Vec3 spin = random_direction(rng, u);
        const Vec3 axis = random_direction(rng, u);

        const Vec3 d{r * dir[0] - spec.sensor[0], r * dir[1] - spec.sensor[1], r * dir[2] - spec.sensor[2]};
        const double dist = std::sqrt(dot(d, d));
        const Vec3 rhat{d[0] / dist, d[1] / dist, d[2] / dist};
        const double proj = 3.0 * dot(spin, rhat);
        const double scale = spec.moment / (dist * dist * dist);
        const Vec3 b{scale * (proj * rhat[0] - spin[0]), scale * (proj * rhat[1] - spin[1]),
                     scale * (proj * rhat[2] - spin[2])};
        const double along = dot(b, axis);
        acc.add(w * (dot(b, b) - along * along));
    }
    return acc;
}

constexpr std::uint64_t kChunks = 16;

} // namespace

MonteCarloResult b_perp_mc(const ParticleGeometry& g, const BathDescription& bath,
                           const MonteCarloOptions& options) {
    g.validate();
    require(options.samples >= 10'000, "Monte Carlo needs at least 1e4 samples");
    require(options.cutoff_factor > 1.0, "cutoff factor must exceed 1");

    const double r0 = g.radius();
    SampleSpec spec;
    spec.sensor = {0.0, 0.0, g.sensor_offset};
    double density = 0.0;
    double tail = 0.0;
    if (const auto* s = std::get_if<SurfaceBath>(&bath)) {
        s->validate();
        density = s->areal_density;
        spec.surface = true;
        spec.r_inner = r0;
        spec.weight = density * 4.0 * kPi * r0 * r0;
        spec.moment = std::sqrt(dipolar_prefactor(s->gamma, s->spin));
    } else {
        const auto& v = std::get<VolumeBath>(bath);
        v.validate();
        density = v.number_density;
        spec.surface = false;
        spec.r_inner = r0 + v.standoff;
        spec.r_outer = options.cutoff_factor * r0;
        require(spec.r_outer > spec.r_inner, "cutoff radius must exceed the closest approach");
        spec.weight = density * 4.0 * kPi * (1.0 / spec.r_inner - 1.0 / spec.r_outer);
        spec.moment = std::sqrt(dipolar_prefactor(v.gamma, v.spin));
        // Beyond the cutoff the sensor offset is negligible: integrate the
        // centred r^-6 kernel from r_outer to infinity.
        tail = dipolar_prefactor(v.gamma, v.spin) * kTransverseGeometricFactor * 4.0 * kPi / 3.0 *
               density / std::pow(spec.r_outer, 3);
    }

    MonteCarloResult out;
    out.samples = options.samples;
    out.seed = options.seed;
    if (density == 0.0) return out;

    std::vector<std::future<Moments>> jobs;
    for (std::uint64_t c = 0; c < kChunks; ++c) {
        const std::uint64_t n = options.samples / kChunks + (c < options.samples % kChunks ? 1 : 0);
        jobs.push_back(std::async(std::launch::async, run_chunk, std::cref(spec), n,
                                  derive_seed(options.seed, c)));
    }
    Moments total;
    for (auto& j : jobs) total.merge(j.get());

    const double variance = total.m2 / static_cast<double>(total.n - 1);
    out.std_error = std::sqrt(variance / static_cast<double>(total.n));
    out.tail_correction = tail;
    out.mean = total.mean + tail;
    out.tail_warning = tail > out.std_error;
    return out;
}

// ---------------------------------------------------------------------------

double calibrate_surface_density(double t1_measured, const ParticleGeometry& g, double t1_bulk,
                                 AngularFrequency omega0, double tau_c_surface,
                                 const SurfaceBath& bath_template) {
    require(t1_bulk > 0.0, "t1_bulk must be positive");
    require(t1_measured > 0.0, "measured T1 must be positive");
    if (t1_measured >= t1_bulk)
        throw NumericalError("no surface density reproduces T1 >= T1_bulk");
    SurfaceBath unit = bath_template;
    unit.areal_density = 1.0;
    const NoiseSource src{"surface", unit.gamma, b_perp_sq_surface(g, unit), tau_c_surface};
    const double per_density = rate_contribution(src, omega0);
    return (1.0 / t1_measured - 1.0 / t1_bulk) / per_density;
}

DensityScaleFit effective_gd_density_fit(std::span<const DensityPoint> points,
                                         const std::function<double(double)>& rate_model) {
    require(points.size() >= 3, "density fit needs at least 3 points");
    bool distinct = false;
    for (const auto& p : points) {
        require(p.n_prepared >= 0.0 && p.t1 > 0.0, "density points need n >= 0 and t1 > 0");
        if (p.n_prepared != points.front().n_prepared) distinct = true;
    }
    if (!distinct) throw NumericalError("density fit is degenerate: all prepared densities are equal");

    auto rss = [&](double scale) {
        double sum = 0.0;
        for (const auto& p : points) {
            const double r = rate_model(scale * p.n_prepared) - 1.0 / p.t1;
            sum += r * r;
        }
        return sum;
    };

    DensityScaleFit fit;
    boost::uintmax_t iters = 200;
    const auto best = boost::math::tools::brent_find_minima(
        [&](double log_s) { return rss(std::exp(log_s)); }, std::log(1e-4), std::log(1e4), 52, iters);
    double scale = std::exp(best.first);

    // Gauss-Newton polish in linear scale; the log-space bracket search is
    // only accurate to ~sqrt(eps).
    for (int k = 0; k < 50; ++k) {
        const double h = 1e-6 * scale;
        double jtj = 0.0, jtr = 0.0;
        for (const auto& p : points) {
            const double r = rate_model(scale * p.n_prepared) - 1.0 / p.t1;
            const double j = (rate_model((scale + h) * p.n_prepared) - rate_model((scale - h) * p.n_prepared)) / (2.0 * h);
            jtj += j * j;
            jtr += j * r;
        }
        if (jtj <= 0.0) break;
        const double step = jtr / jtj;
        const double candidate = scale - step;
        if (!(candidate > 0.0) || rss(candidate) > rss(scale)) break;
        scale = candidate;
        ++iters;
        if (std::abs(step) <= 1e-14 * scale) break;
    }

    fit.scale = scale;
    fit.residual_sum_sq = rss(scale);
    fit.iterations = static_cast<int>(iters);
    double jtj = 0.0;
    const double h = 1e-6 * scale;
    for (const auto& p : points) {
        const double j = (rate_model((scale + h) * p.n_prepared) - rate_model((scale - h) * p.n_prepared)) / (2.0 * h);
        jtj += j * j;
    }
    const double dof = static_cast<double>(points.size() - 1);
    fit.scale_stderr = jtj > 0.0 ? std::sqrt(fit.residual_sum_sq / dof / jtj) : INFINITY;
    return fit;
}

} // namespace rbm
