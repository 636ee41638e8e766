#include <doctest.h>

#include <rbm/error.hpp>
#include <rbm/measure.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace rbm;

namespace {
MeasurementPlan plan_for(double t1, std::uint64_t shots = 1'000'000) {
    MeasurementPlan p;
    p.dark_times = MeasurementPlan::default_dark_times(t1);
    p.shots_per_point = shots;
    return p;
}

RelaxationCurve exact_curve(double t1, double contrast) {
    RelaxationCurve c;
    for (double tau : MeasurementPlan::default_dark_times(t1))
        c.points.push_back({tau, expected_signal(tau, t1, contrast), 1e-3});
    return c;
}
} // namespace

TEST_CASE("default dark times") {
    const auto t = MeasurementPlan::default_dark_times(40e-6);
    CHECK(t.size() == 12);
    CHECK(t.front() == doctest::Approx(1e-6));
    CHECK(t.back() == doctest::Approx(200e-6));
    CHECK(std::is_sorted(t.begin(), t.end()));
}

TEST_CASE("noise-free curve is recovered exactly") {
    const auto fit = fit_exponential(exact_curve(43.7e-6, 0.2));
    REQUIRE(fit.converged);
    CHECK(fit.t1_hat == doctest::Approx(43.7e-6).epsilon(1e-9));
    CHECK(fit.amplitude == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(fit.baseline == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(fit.reduced_chi_sq < 1e-12);
}

TEST_CASE("fit is order-insensitive") {
    auto plan = plan_for(45e-6);
    const auto curve = simulate_curve(45e-6, plan, 3);
    auto shuffled = curve;
    std::mt19937 g(1);
    std::shuffle(shuffled.points.begin(), shuffled.points.end(), g);
    const auto a = fit_exponential(curve);
    const auto b = fit_exponential(shuffled);
    CHECK(a.t1_hat == b.t1_hat);
    CHECK(a.t1_stderr == b.t1_stderr);
}

TEST_CASE("huge shot counts approach the analytic T1") {
    for (bool reference : {true, false}) {
        auto plan = plan_for(43.7e-6, 1'000'000'000'000ULL);
        plan.include_reference = reference;
        const auto fit = fit_exponential(simulate_curve(43.7e-6, plan, 17));
        REQUIRE(fit.converged);
        CHECK(std::abs(fit.t1_hat / 43.7e-6 - 1.0) < 1e-3);
    }
}

TEST_CASE("simulation is deterministic in the seed") {
    const auto plan = plan_for(50e-6);
    const auto a = simulate_curve(50e-6, plan, 99);
    const auto b = simulate_curve(50e-6, plan, 99);
    const auto c = simulate_curve(50e-6, plan, 100);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        CHECK(a.points[i].signal == b.points[i].signal);
        CHECK(a.raw_counts[i].signal == b.raw_counts[i].signal);
    }
    bool differs = false;
    for (std::size_t i = 0; i < a.points.size(); ++i) differs |= a.points[i].signal != c.points[i].signal;
    CHECK(differs);
}

TEST_CASE("photon counts have Poisson statistics") {
    // mean and variance of the per-point total match D T_D N_shots * signal
    MeasurementPlan plan;
    plan.dark_times = {1e-6, 1e-5, 1e-4, 1e-3};
    plan.shots_per_point = 2000;
    plan.include_reference = false;
    const double t1 = 1e-4;
    const double lam = 1e5 * 500e-9 * 2000 * expected_signal(1e-3, t1, 0.2);
    double sum = 0.0, sum2 = 0.0;
    const int reps = 4000;
    for (int i = 0; i < reps; ++i) {
        const double k = static_cast<double>(simulate_curve(t1, plan, 1000 + i).raw_counts[3].signal);
        sum += k;
        sum2 += k * k;
    }
    const double mean = sum / reps;
    const double var = sum2 / reps - mean * mean;
    CHECK(std::abs(mean - lam) < 4.0 * std::sqrt(lam / reps));
    CHECK(var / lam == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("stderr matches the replicate scatter") {
    auto plan = plan_for(45e-6, 100'000);
    std::vector<double> values;
    double reported = 0.0;
    for (int i = 0; i < 2000; ++i) {
        const auto c = simulate_curve(45e-6, plan, 500 + i);
        values.push_back(c.points[5].signal);
        reported += c.points[5].std_error;
    }
    reported /= 2000.0;
    const auto g = gaussian_summary(values);
    CHECK(g.sigma / reported == doctest::Approx(1.0).epsilon(0.08));
}

TEST_CASE("plan validation") {
    MeasurementPlan p;
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p.dark_times = {1e-6, 2e-6, 3e-6, 4e-6};
    p.contrast = 0.0;
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p.contrast = 1.5;
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p.contrast = 0.2;
    p.shots_per_point = 0;
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p.shots_per_point = 10;
    p.dark_times = {2e-6, 1e-6, 3e-6, 4e-6};
    CHECK_THROWS_AS(p.validate(), ParameterError);
}

TEST_CASE("fit preconditions and failure reporting") {
    RelaxationCurve few;
    few.points = {{1e-6, 1.0, 1e-3}, {2e-6, 0.9, 1e-3}, {3e-6, 0.85, 1e-3}};
    CHECK_THROWS_AS(fit_exponential(few), ParameterError);

    // flat data cannot define T1
    RelaxationCurve flat;
    for (int i = 1; i <= 8; ++i) flat.points.push_back({i * 1e-6, 1.0, 1e-3});
    const auto f = fit_exponential(flat);
    CHECK((!f.converged || f.ill_conditioned));
}

TEST_CASE("curve text round-trips losslessly") {
    const auto c = simulate_curve(45e-6, plan_for(45e-6), 4);
    std::stringstream ss;
    write_curve(ss, c);
    const auto back = read_curve(ss);
    REQUIRE(back.points.size() == c.points.size());
    for (std::size_t i = 0; i < c.points.size(); ++i) {
        CHECK(back.points[i].tau == c.points[i].tau);
        CHECK(back.points[i].signal == c.points[i].signal);
        CHECK(back.points[i].std_error == c.points[i].std_error);
    }
    const auto a = fit_exponential(c);
    const auto b = fit_exponential(back);
    CHECK(a.t1_hat == b.t1_hat);
}

TEST_CASE("malformed curve rows report the line") {
    std::istringstream in("tau_s,signal,stderr\n1e-6,0.99,0.01\n2e-6,oops,0.01\n");
    try {
        read_curve(in);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    std::istringstream missing("tau_s,signal,stderr\n1e-6,0.99\n");
    CHECK_THROWS_AS(read_curve(missing), ParseError);
}

TEST_CASE("fit json round-trips") {
    const auto fit = fit_exponential(simulate_curve(45e-6, plan_for(45e-6), 8));
    const auto plan = plan_for(45e-6);
    const auto text = fit_to_json(fit, &plan, 8);
    const auto back = fit_from_json(text);
    CHECK(back.t1_hat == fit.t1_hat);
    CHECK(back.t1_stderr == fit.t1_stderr);
    CHECK(back.covariance[2][2] == fit.covariance[2][2]);
    CHECK(back.converged == fit.converged);
    CHECK(text.find("\"seed\": 8") != std::string::npos);
}

TEST_CASE("gaussian summary and separation") {
    const std::vector<double> a{1, 2, 3, 4, 5};
    const auto g = gaussian_summary(a);
    CHECK(g.mean == doctest::Approx(3.0));
    CHECK(g.sigma == doctest::Approx(std::sqrt(2.0)));
    CHECK(g.count == 5);
    CHECK_THROWS(gaussian_summary(std::vector<double>{1, 2, 3}));
    CHECK_THROWS(gaussian_summary(std::vector<double>{2, 2, 2, 2, 2}));

    const GaussianSummary x{10.0, 2.0, 25};
    const GaussianSummary y{16.0, 4.5, 36};
    const auto z = separation(x, y);
    CHECK(z.geometric == doctest::Approx(6.0 / 3.0));
    CHECK(z.pooled == doctest::Approx(6.0 / std::sqrt((4.0 + 20.25) / 2.0)));
    CHECK(z.of_means == doctest::Approx(6.0 / std::sqrt(4.0 / 25.0 + 20.25 / 36.0)));
}

TEST_CASE("spot ensemble is reproducible and seeds are per spot") {
    SpotSampler sampler = [](Engine& rng) {
        std::normal_distribution<double> d(45e-6, 3e-6);
        return SpotTruth{d(rng), 0.0, 0.0};
    };
    const auto plan = plan_for(45e-6);
    const auto a = simulate_spot_ensemble(sampler, 12, plan, 77);
    const auto b = simulate_spot_ensemble(sampler, 12, plan, 77);
    REQUIRE(a.size() == 12);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].truth.t1 == b[i].truth.t1);
        CHECK(a[i].fit.t1_hat == b[i].fit.t1_hat);
        CHECK(a[i].curve_seed == derive_seed(77, 2 * i + 1));
    }
    // the first spots do not depend on how many follow
    const auto c = simulate_spot_ensemble(sampler, 5, plan, 77);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i].fit.t1_hat == a[i].fit.t1_hat);
}
