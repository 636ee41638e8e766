#include <doctest.h>

#include <rbm/bath.hpp>
#include <rbm/error.hpp>
#include <rbm/relax.hpp>

#include <cmath>
#include <vector>

using namespace rbm;

namespace {
constexpr double kPi = std::numbers::pi;

// Per-spin transverse variance: |3(m.r)r - m|^2 averages to 2|m|^2 over spin
// directions, and a random sensor axis keeps 2/3 of that.
double per_spin_coefficient(double spin) {
    const double g = constants::kGammaElectron;
    const double mu = constants::kMu0Over4Pi * g * constants::kHbar;
    return mu * mu * spin * (spin + 1.0) * 2.0 * (2.0 / 3.0);
}
} // namespace

TEST_CASE("closed forms against direct shell integration") {
    ParticleGeometry g{25e-9, 0.0};
    SurfaceBath s{1e18, 0.5};
    const double r0 = 12.5e-9;
    // N = 4 pi r0^2 sigma spins, each at distance r0
    const double surface = 4.0 * kPi * r0 * r0 * 1e18 * per_spin_coefficient(0.5) / std::pow(r0, 6);
    CHECK(b_perp_sq_surface(g, s) == doctest::Approx(surface).epsilon(1e-12));

    VolumeBath v{7e25, 3.5};
    v.standoff = 1e-9;
    // integral of n 4 pi r^2 / r^6 from R to infinity = 4 pi n / (3 R^3)
    const double R = r0 + 1e-9;
    const double volume = 4.0 * kPi * 7e25 / (3.0 * R * R * R) * per_spin_coefficient(3.5);
    CHECK(b_perp_sq_volume(g, v) == doctest::Approx(volume).epsilon(1e-12));
}

TEST_CASE("B_perp^2 is linear in density") {
    ParticleGeometry g{25e-9, 0.0};
    for (double k : {0.1, 2.0, 37.0}) {
        CHECK(b_perp_sq_surface(g, SurfaceBath{k * 1e18}) ==
              doctest::Approx(k * b_perp_sq_surface(g, SurfaceBath{1e18})).epsilon(1e-12));
        CHECK(b_perp_sq_volume(g, VolumeBath{k * 1e25}) ==
              doctest::Approx(k * b_perp_sq_volume(g, VolumeBath{1e25})).epsilon(1e-12));
    }
    CHECK(b_perp_sq_surface(g, SurfaceBath{0.0}) == 0.0);
}

TEST_CASE("radius scaling laws") {
    const SurfaceBath s{1e18};
    const VolumeBath v{1e25};
    const ParticleGeometry a{20e-9, 0.0};
    const ParticleGeometry b{40e-9, 0.0};
    CHECK(b_perp_sq_surface(a, s) / b_perp_sq_surface(b, s) == doctest::Approx(16.0).epsilon(1e-12));
    CHECK(b_perp_sq_volume(a, v) / b_perp_sq_volume(b, v) == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("Monte Carlo agrees with the closed forms") {
    ParticleGeometry g{25e-9, 0.0};
    MonteCarloOptions opt;
    opt.samples = 400'000;
    opt.seed = 11;
    const SurfaceBath s{1.6e18};
    const auto ms = b_perp_mc(g, s, opt);
    CHECK(std::abs(ms.mean - b_perp_sq_surface(g, s)) < 3.0 * ms.std_error);
    const VolumeBath v{6.9e25};
    const auto mv = b_perp_mc(g, v, opt);
    CHECK(std::abs(mv.mean - b_perp_sq_volume(g, v)) < 3.0 * mv.std_error);
    CHECK(mv.tail_correction > 0.0);
    CHECK(mv.samples == opt.samples);
}

TEST_CASE("Monte Carlo is reproducible from its seed") {
    ParticleGeometry g{25e-9, 0.0};
    MonteCarloOptions opt;
    opt.samples = 50'000;
    opt.seed = 5;
    const auto a = b_perp_mc(g, VolumeBath{1e25}, opt);
    const auto b = b_perp_mc(g, VolumeBath{1e25}, opt);
    CHECK(a.mean == b.mean);
    CHECK(a.std_error == b.std_error);
    opt.seed = 6;
    CHECK(b_perp_mc(g, VolumeBath{1e25}, opt).mean != a.mean);
}

TEST_CASE("Monte Carlo edge cases") {
    ParticleGeometry g{25e-9, 0.0};
    MonteCarloOptions opt;
    opt.samples = 10'000;
    const auto z = b_perp_mc(g, SurfaceBath{0.0}, opt);
    CHECK(z.mean == 0.0);
    CHECK(z.std_error == 0.0);
    opt.samples = 100;
    CHECK_THROWS_AS(b_perp_mc(g, SurfaceBath{1e18}, opt), ParameterError);
}

TEST_CASE("off-centre sensor raises the surface field") {
    ParticleGeometry centred{25e-9, 0.0};
    ParticleGeometry offset{25e-9, 5e-9};
    MonteCarloOptions opt;
    opt.samples = 200'000;
    const auto a = b_perp_mc(centred, SurfaceBath{1e18}, opt);
    const auto b = b_perp_mc(offset, SurfaceBath{1e18}, opt);
    CHECK(b.mean > a.mean + 3.0 * (a.std_error + b.std_error));
    CHECK_THROWS_AS(b_perp_sq_surface(offset, SurfaceBath{1e18}), ParameterError);
}

TEST_CASE("surface density calibration inverts the forward model") {
    ParticleGeometry g{25e-9, 0.0};
    const double tau = 5.5e-11;
    const SurfaceBath truth{1.3e18};
    NoiseSource src;
    src.b_perp_sq = b_perp_sq_surface(g, truth);
    src.tau_c = tau;
    const double t1 = t1_total(std::vector{src}, 3e-3, kNvOmega0).t1;
    CHECK(calibrate_surface_density(t1, g, 3e-3, kNvOmega0, tau) == doctest::Approx(1.3e18).epsilon(1e-10));
    CHECK_THROWS_AS(calibrate_surface_density(4e-3, g, 3e-3, kNvOmega0, tau), NumericalError);
}

TEST_CASE("effective density scale is recovered from synthetic data") {
    auto model = [](double n) { return 1000.0 + 2.0e-22 * n / (1.0 + n / 1e26); };
    std::vector<DensityPoint> pts;
    for (double n : {1e24, 5e24, 2e25, 6e25}) pts.push_back({n, 1.0 / model(3.7 * n)});
    const auto fit = effective_gd_density_fit(pts, model);
    CHECK(fit.scale == doctest::Approx(3.7).epsilon(1e-8));
    CHECK(fit.residual_sum_sq < 1e-12);

    std::vector<DensityPoint> two(pts.begin(), pts.begin() + 2);
    CHECK_THROWS_AS(effective_gd_density_fit(two, model), ParameterError);
    std::vector<DensityPoint> same{{1e25, 1e-4}, {1e25, 1.1e-4}, {1e25, 0.9e-4}};
    CHECK_THROWS(effective_gd_density_fit(same, model));
}
