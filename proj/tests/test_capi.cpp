#include <doctest.h>

#include <rbmrelax/rbmrelax.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {
struct Scn {
    rr_scenario* p = nullptr;
    Scn() { REQUIRE(rr_scenario_default(&p) == RR_OK); }
    ~Scn() { rr_scenario_free(p); }
};
} // namespace

TEST_CASE("version and null handling") {
    CHECK(std::strlen(rr_version()) > 0);
    rr_t1_report r{};
    CHECK(rr_predict_t1(nullptr, &r) == RR_ERR_INVALID);
    CHECK(std::strlen(rr_last_error()) > 0);
    rr_scenario_free(nullptr);
    rr_curve_free(nullptr);
    rr_ensemble_free(nullptr);
    rr_sensitivity_free(nullptr);
}

TEST_CASE("scenario set, get and buffer sizing") {
    Scn s;
    CHECK(rr_scenario_set(s.p, "particle.diameter_nm", "20") == RR_OK);
    char small[2];
    size_t len = 0;
    CHECK(rr_scenario_get(s.p, "particle.diameter_nm", small, sizeof small, &len) == RR_ERR_INVALID);
    CHECK(len == 2);
    char buf[64];
    CHECK(rr_scenario_get(s.p, "particle.diameter_nm", buf, sizeof buf, &len) == RR_OK);
    CHECK(std::string(buf) == "20");
    CHECK(rr_scenario_set(s.p, "particle.bogus", "1") == RR_ERR_INVALID);
    CHECK(rr_scenario_set(s.p, "particle.diameter_nm", "-1") == RR_ERR_INVALID);

    char hash[65];
    CHECK(rr_scenario_hash(s.p, hash) == RR_OK);
    CHECK(std::strlen(hash) == 64);

    std::vector<char> text(8192);
    CHECK(rr_scenario_serialize(s.p, text.data(), text.size(), &len) == RR_OK);
    rr_scenario* back = nullptr;
    CHECK(rr_scenario_parse(text.data(), nullptr, &back) == RR_OK);
    char hash2[65];
    CHECK(rr_scenario_hash(back, hash2) == RR_OK);
    CHECK(std::string(hash) == hash2);
    rr_scenario_free(back);
}

TEST_CASE("parse errors map to RR_ERR_PARSE") {
    rr_scenario* s = nullptr;
    CHECK(rr_scenario_parse("[particle]\nnope = 1\n", nullptr, &s) == RR_ERR_PARSE);
    CHECK(s == nullptr);
    CHECK(std::string(rr_last_error()).find("line 2") != std::string::npos);
    CHECK(rr_scenario_load("/nonexistent.ini", &s) == RR_ERR_IO);
}

TEST_CASE("forward model through the C API") {
    Scn s;
    rr_t1_report r{};
    REQUIRE(rr_predict_t1(s.p, &r) == RR_OK);
    CHECK(r.rate_bulk + r.rate_surface + r.rate_gd == doctest::Approx(r.rate_total).epsilon(1e-12));
    CHECK(r.r_total == doctest::Approx(60.2e9).epsilon(0.01));

    rr_axis axis;
    CHECK(rr_axis_from_name("diameter", &axis) == RR_OK);
    CHECK(rr_axis_from_name("mass", &axis) == RR_ERR_INVALID);
    const double grid[] = {20e-9, 25e-9, 30e-9};
    rr_t1_report rows[3];
    CHECK(rr_sweep(s.p, axis, grid, 3, rows) == RR_OK);
    CHECK(rows[0].t1 < rows[2].t1);
    const auto path = fs::temp_directory_path() / "rbm_capi_sweep.csv";
    CHECK(rr_sweep_write(path.c_str(), axis, grid, rows, 3) == RR_OK);
}

TEST_CASE("baths through the C API") {
    Scn s;
    double b = 0.0;
    CHECK(rr_bath_closed_form(s.p, RR_BATH_GD, &b) == RR_OK);
    rr_mc_result mc{};
    CHECK(rr_bath_monte_carlo(s.p, RR_BATH_GD, 100000, 9, &mc) == RR_OK);
    CHECK(std::abs(mc.mean - b) < 4.0 * mc.std_error);
    double sigma = 0.0;
    CHECK(rr_calibrate_surface_density(s.p, 130e-6, &sigma) == RR_OK);
    CHECK(sigma == doctest::Approx(1.6076e18).epsilon(1e-4));
    CHECK(rr_calibrate_surface_density(s.p, 1.0, &sigma) == RR_ERR_NUMERICAL);
}

TEST_CASE("curves and fits through the C API") {
    Scn s;
    rr_curve* c = nullptr;
    REQUIRE(rr_curve_simulate(s.p, 45e-6, 5, &c) == RR_OK);
    CHECK(rr_curve_size(c) == 12);
    rr_fit fit{};
    CHECK(rr_fit_curve(c, nullptr, &fit) == RR_OK);
    CHECK(fit.converged == 1);
    CHECK(fit.t1 == doctest::Approx(45e-6).epsilon(0.5));
    const auto path = fs::temp_directory_path() / "rbm_capi_curve.csv";
    CHECK(rr_curve_write(c, path.c_str()) == RR_OK);
    rr_curve* back = nullptr;
    CHECK(rr_curve_read(path.c_str(), &back) == RR_OK);
    rr_fit fit2{};
    CHECK(rr_fit_curve(back, nullptr, &fit2) == RR_OK);
    CHECK(fit2.t1 == fit.t1);
    double tau, sig, se;
    CHECK(rr_curve_point(c, 99, &tau, &sig, &se) == RR_ERR_INVALID);
    rr_curve_free(c);
    rr_curve_free(back);

    const double t[] = {1e-6, 1e-5, 5e-5, 1e-4, 2e-4};
    std::vector<double> y, e(5, 1e-3);
    for (double x : t) y.push_back(0.8 + 0.2 * std::exp(-x / 5e-5));
    rr_curve* exact = nullptr;
    CHECK(rr_curve_from_points(t, y.data(), e.data(), 5, &exact) == RR_OK);
    CHECK(rr_fit_curve(exact, nullptr, &fit) == RR_OK);
    CHECK(fit.t1 == doctest::Approx(5e-5).epsilon(1e-8));
    CHECK(rr_fit_write_json(&fit, (fs::temp_directory_path() / "rbm_capi_fit.json").c_str()) == RR_OK);
    rr_curve_free(exact);
}

TEST_CASE("ensemble and statistics through the C API") {
    Scn s;
    rr_ensemble* e = nullptr;
    REQUIRE(rr_ensemble_run(s.p, 8, 3, &e) == RR_OK);
    CHECK(rr_ensemble_size(e) == 8);
    rr_spot spot{};
    CHECK(rr_ensemble_spot(e, 0, &spot) == RR_OK);
    CHECK(spot.true_t1 > 0.0);
    rr_gaussian g{};
    CHECK(rr_ensemble_summary(e, &g) == RR_OK);
    CHECK(g.count <= 8);
    rr_ensemble_free(e);

    const double xs[] = {1, 2, 3, 4, 5};
    CHECK(rr_gaussian_summary(xs, 5, &g) == RR_OK);
    CHECK(g.mean == doctest::Approx(3.0));
    CHECK(rr_gaussian_summary(xs, 2, &g) != RR_OK);
    rr_gaussian h{5.0, 1.0, 5};
    rr_separation z{};
    CHECK(rr_separation_compute(&g, &h, &z) == RR_OK);
    CHECK(z.pooled > 0.0);
}

TEST_CASE("sensitivity through the C API") {
    rr_sensitivity_inputs in{0.2, 1e5, 500e-9, 10.0, 1.760859e11, 1e-8, 6.02e10, 2.0 * M_PI * 2.87e9};
    double d = 0.0, o = 0.0;
    CHECK(rr_delta_r_min(&in, &d) == RR_OK);
    CHECK(rr_delta_r_oracle(&in, 1e-4 * in.r_total, &o) == RR_OK);
    CHECK(d / o == doctest::Approx(1.043).epsilon(2e-3));
    in.r_total = in.omega0;
    CHECK(rr_delta_r_min(&in, &d) == RR_ERR_NUMERICAL);

    Scn s;
    rr_sensitivity* c = nullptr;
    REQUIRE(rr_sensitivity_compute(s.p, nullptr, 0, &c) == RR_OK);
    CHECK(rr_sensitivity_size(c) == 121);
    rr_sensitivity_point gmin{}, ref{};
    int boundary = 1;
    CHECK(rr_sensitivity_minimum(c, &gmin, &ref, &boundary) == RR_OK);
    CHECK(boundary == 0);
    CHECK(ref.delta_r_min <= gmin.delta_r_min);
    CHECK(rr_sensitivity_notice_count(c) == 0);
    rr_sensitivity_free(c);
}

TEST_CASE("oracles through the C API") {
    Scn s;
    rr_oracle_kind kind;
    CHECK(rr_oracle_from_name("quadrature", &kind) == RR_OK);
    CHECK(rr_oracle_from_name("astrology", &kind) == RR_ERR_INVALID);
    std::vector<char> buf(4096);
    size_t len = 0;
    int passed = 0;
    CHECK(rr_oracle_run(s.p, kind, buf.data(), buf.size(), &len, &passed) == RR_OK);
    CHECK(passed == 1);
    CHECK(len > 0);
}

TEST_CASE("calibration through the C API") {
    Scn s;
    rr_calibration cal{};
    CHECK(rr_calibrate(s.p, &cal) == RR_OK);
    CHECK(cal.molecule_radius * 1e9 == doctest::Approx(0.4961368849).epsilon(1e-8));
}
