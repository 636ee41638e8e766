#include "rbm/measure.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "rbm/error.hpp"

namespace rbm {

using detail::require;

void MeasurementPlan::validate() const {
    require(dark_times.size() >= 4, "measurement plan needs at least 4 dark times");
    require(std::is_sorted(dark_times.begin(), dark_times.end()), "dark times must be ascending");
    require(dark_times.front() >= 0.0, "dark times must be >= 0");
    require(shots_per_point >= 1, "shots per point must be >= 1");
    require(detection_window > 0.0, "detection window must be positive");
    require(photon_rate > 0.0, "photon rate must be positive");
    require(contrast > 0.0 && contrast < 1.0, "contrast must be in (0, 1)");
}

std::vector<double> MeasurementPlan::default_dark_times(double expected_t1, std::size_t points) {
    require(expected_t1 > 0.0, "expected T1 must be positive");
    require(points >= 4, "need at least 4 dark times");
    const double lo = 1e-6;
    const double hi = std::max(5.0 * expected_t1, 10.0 * lo);
    std::vector<double> out(points);
    for (std::size_t i = 0; i < points; ++i)
        out[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(points - 1));
    return out;
}

double expected_signal(double tau, double t1, double contrast) {
    return 1.0 - contrast + contrast * std::exp(-tau / t1);
}

RelaxationCurve simulate_curve(double t1_true, const MeasurementPlan& plan, std::uint64_t seed) {
    plan.validate();
    require(t1_true > 0.0 && std::isfinite(t1_true), "T1 must be positive");
    Engine rng(seed);
    const double shots = static_cast<double>(plan.shots_per_point);
    const double per_shot = plan.photon_rate * plan.detection_window;
    const double mu_ref = shots * per_shot;

    RelaxationCurve curve;
    for (double tau : plan.dark_times) {
        const double mu_sig = mu_ref * expected_signal(tau, t1_true, plan.contrast);
        const auto n_sig = std::poisson_distribution<std::uint64_t>(mu_sig)(rng);
        std::uint64_t n_ref = 0;
        if (plan.include_reference) n_ref = std::poisson_distribution<std::uint64_t>(mu_ref)(rng);
        if (n_sig == 0 || (plan.include_reference && n_ref == 0))
            throw NumericalError("zero photon counts at a dark time; increase shots_per_point");

        CurvePoint p{tau, 0.0, 0.0};
        const double s = static_cast<double>(n_sig);
        if (plan.include_reference) {
            const double r = static_cast<double>(n_ref);
            p.signal = s / r;
            p.std_error = p.signal * std::sqrt(1.0 / s + 1.0 / r);
        } else {
            p.signal = s / mu_ref;
            p.std_error = std::sqrt(s) / mu_ref;
        }
        if (plan.shots_per_point == 1) p.std_error = 0.0;
        curve.points.push_back(p);
        curve.raw_counts.push_back({n_sig, n_ref});
    }
    return curve;
}

// ---------------------------------------------------------------------------
// Fitting

namespace {

std::vector<CurvePoint> sorted_points(const RelaxationCurve& curve) {
    auto pts = curve.points;
    std::stable_sort(pts.begin(), pts.end(), [](const CurvePoint& a, const CurvePoint& b) {
        if (a.tau != b.tau) return a.tau < b.tau;
        return a.signal < b.signal;
    });
    return pts;
}

FitGuess guess_from_sorted(const std::vector<CurvePoint>& pts) {
    FitGuess g;
    g.baseline = pts.back().signal;
    g.amplitude = pts.front().signal - pts.back().signal;
    const double target = g.baseline + g.amplitude / std::numbers::e;
    g.t1 = pts[pts.size() / 2].tau;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double y0 = pts[i - 1].signal - target;
        const double y1 = pts[i].signal - target;
        if ((y0 > 0.0) != (y1 > 0.0) || y1 == 0.0) {
            const double t0 = pts[i - 1].tau, t1 = pts[i].tau;
            const double f = y0 / (y0 - y1);
            g.t1 = t0 > 0.0 ? t0 * std::pow(t1 / t0, f) : t0 + f * (t1 - t0);
            break;
        }
    }
    if (!(g.t1 > 0.0)) g.t1 = pts.back().tau / 2.0;
    return g;
}

} // namespace

FitGuess initial_guess(const RelaxationCurve& curve) {
    require(!curve.points.empty(), "empty curve");
    return guess_from_sorted(sorted_points(curve));
}

FitResult fit_exponential(const RelaxationCurve& curve, std::optional<FitGuess> guess) {
    require(curve.points.size() >= 4, "exponential fit needs at least 4 points");
    const auto pts = sorted_points(curve);
    const FitGuess start = guess ? *guess : guess_from_sorted(pts);
    require(start.t1 > 0.0, "initial T1 guess must be positive");
    const double tau_min = pts.front().tau, tau_max = pts.back().tau;
    require(tau_max >= 2.0 * start.t1 || (tau_min > 0.0 && tau_max >= 10.0 * tau_min) ||
                (tau_min == 0.0 && tau_max > 0.0),
            "dark times must span a decade or reach twice the T1 guess");

    const auto n = static_cast<Eigen::Index>(pts.size());
    bool weighted = std::all_of(pts.begin(), pts.end(), [](const CurvePoint& p) { return p.std_error > 0.0; });
    Eigen::VectorXd tau(n), y(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        tau[i] = pts[i].tau;
        y[i] = pts[i].signal;
        w[i] = weighted ? 1.0 / (pts[i].std_error * pts[i].std_error) : 1.0;
    }

    Eigen::Vector3d p(start.baseline, start.amplitude, start.t1);
    auto residuals = [&](const Eigen::Vector3d& q) {
        Eigen::VectorXd r(n);
        for (Eigen::Index i = 0; i < n; ++i) r[i] = y[i] - (q[0] + q[1] * std::exp(-tau[i] / q[2]));
        return r;
    };
    auto jacobian = [&](const Eigen::Vector3d& q) {
        Eigen::MatrixXd j(n, 3);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double e = std::exp(-tau[i] / q[2]);
            j(i, 0) = 1.0;
            j(i, 1) = e;
            j(i, 2) = q[1] * tau[i] / (q[2] * q[2]) * e;
        }
        return j;
    };
    auto chi_sq = [&](const Eigen::VectorXd& r) { return (r.array().square() * w.array()).sum(); };

    FitResult out;
    out.weighted = weighted;
    Eigen::VectorXd r = residuals(p);
    double chi = chi_sq(r);
    double lambda = 1e-3;
    constexpr int kMaxIterations = 500;
    int it = 0;
    for (; it < kMaxIterations; ++it) {
        const Eigen::MatrixXd j = jacobian(p);
        const Eigen::MatrixXd jw = j.transpose() * w.asDiagonal();
        const Eigen::Matrix3d jtj = jw * j;
        const Eigen::Vector3d g = jw * r;
        if (chi <= 1e-30 * static_cast<double>(n)) {
            out.converged = true;
            break;
        }
        bool accepted = false;
        Eigen::Vector3d step = Eigen::Vector3d::Zero();
        while (lambda < 1e16) {
            Eigen::Matrix3d a = jtj;
            a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-300);
            step = a.ldlt().solve(g);
            const Eigen::Vector3d trial = p + step;
            if (trial[2] > 0.0 && std::isfinite(trial[2])) {
                const Eigen::VectorXd rt = residuals(trial);
                const double ct = chi_sq(rt);
                if (ct <= chi) {
                    p = trial;
                    r = rt;
                    const double drop = chi - ct;
                    chi = ct;
                    lambda = std::max(lambda * 0.1, 1e-12);
                    accepted = true;
                    const bool small_step =
                        (step.array().abs() <= 1e-12 * (p.array().abs() + 1e-300)).all();
                    if (small_step || drop <= 1e-15 * chi) out.converged = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if (!accepted) {
            // No downhill step at any damping: we sit at the minimum to
            // machine precision, provided the gradient is negligible.
            const Eigen::Vector3d scaled = g.cwiseAbs().cwiseQuotient(
                (jtj.diagonal().cwiseSqrt() * std::sqrt(std::max(chi, 1e-300))).cwiseMax(1e-300));
            out.converged = scaled.maxCoeff() < 1e-6;
            break;
        }
        if (out.converged) break;
    }
    out.iterations = it + 1;

    out.baseline = p[0];
    out.amplitude = p[1];
    out.t1_hat = p[2];
    const double dof = static_cast<double>(n - 3);
    out.reduced_chi_sq = dof > 0.0 ? chi / dof : 0.0;

    const Eigen::MatrixXd j = jacobian(p);
    const Eigen::Matrix3d curvature = j.transpose() * w.asDiagonal() * j;
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(curvature);
    const auto& sv = svd.singularValues();
    const double cond = sv[2] > 0.0 ? sv[0] / sv[2] : INFINITY;
    out.ill_conditioned = !(cond < 1e14);
    Eigen::Matrix3d cov = Eigen::Matrix3d::Constant(INFINITY);
    if (!out.ill_conditioned) {
        cov = curvature.inverse();
        // Without measured errors the residual scatter sets the noise scale.
        if (!weighted && dof > 0.0) cov *= chi / dof;
    }
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) out.covariance[a][b] = cov(a, b);
    out.t1_stderr = std::sqrt(cov(2, 2));

    if (!out.converged)
        out.message = "no convergence after " + std::to_string(out.iterations) + " iterations";
    else if (out.ill_conditioned)
        out.message = "singular curvature; standard errors inflated";
    return out;
}

// ---------------------------------------------------------------------------
// Ensembles and summaries

std::vector<SpotRecord> simulate_spot_ensemble(const SpotSampler& sampler, std::size_t n_spots,
                                               const MeasurementPlan& plan, std::uint64_t seed) {
    require(n_spots >= 2, "ensemble needs at least 2 spots");
    plan.validate();
    std::vector<SpotRecord> spots(n_spots);

    auto run = [&](std::size_t i) {
        Engine param_rng(derive_seed(seed, 2 * i));
        SpotRecord& rec = spots[i];
        rec.truth = sampler(param_rng);
        rec.curve_seed = derive_seed(seed, 2 * i + 1);
        try {
            rec.curve = simulate_curve(rec.truth.t1, plan, rec.curve_seed);
            rec.fit = fit_exponential(rec.curve);
        } catch (const std::exception& e) {
            rec.fit = FitResult{};
            rec.fit.message = e.what();
        }
    };

    const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 16);
    std::vector<std::future<void>> jobs;
    for (std::size_t wkr = 0; wkr < workers; ++wkr) {
        jobs.push_back(std::async(std::launch::async, [&, wkr] {
            for (std::size_t i = wkr; i < n_spots; i += workers) run(i);
        }));
    }
    for (auto& j : jobs) j.get();
    return spots;
}

GaussianSummary gaussian_summary(std::span<const double> samples) {
    require(samples.size() >= 5, "Gaussian summary needs at least 5 samples");
    const double n = static_cast<double>(samples.size());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : samples) ss += (x - mean) * (x - mean);
    const double sigma = std::sqrt(ss / n);
    if (!(sigma > 0.0)) throw NumericalError("degenerate sample variance");
    return {mean, sigma, samples.size()};
}

Separation separation(const GaussianSummary& a, const GaussianSummary& b) {
    const double d = std::abs(a.mean - b.mean);
    return {d / std::sqrt(a.sigma * b.sigma),
            d / std::sqrt(0.5 * (a.sigma * a.sigma + b.sigma * b.sigma)),
            d / std::sqrt(a.sigma * a.sigma / static_cast<double>(a.count) +
                          b.sigma * b.sigma / static_cast<double>(b.count))};
}

// ---------------------------------------------------------------------------
// Text formats

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_curve(std::ostream& out, const RelaxationCurve& curve) {
    out << "tau_s,signal,stderr\n";
    for (const auto& p : curve.points)
        out << format_double(p.tau) << ',' << format_double(p.signal) << ',' << format_double(p.std_error) << '\n';
}

void write_curve(const std::filesystem::path& path, const RelaxationCurve& curve) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write curve file: " + path.string());
    write_curve(out, curve);
    if (!out) throw IoError("write failed: " + path.string());
}

RelaxationCurve read_curve(std::istream& in) {
    RelaxationCurve curve;
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        if (!header) {
            if (line.rfind("tau_s", 0) != 0) throw ParseError("expected header 'tau_s,signal,stderr'", lineno);
            header = true;
            continue;
        }
        std::istringstream ss(line);
        CurvePoint p;
        char c1 = 0, c2 = 0;
        if (!(ss >> p.tau >> c1 >> p.signal >> c2 >> p.std_error) || c1 != ',' || c2 != ',')
            throw ParseError("malformed curve row", lineno);
        std::string rest;
        if (ss >> rest) throw ParseError("trailing data in curve row", lineno);
        if (!(p.tau >= 0.0) || !std::isfinite(p.signal) || !(p.std_error >= 0.0))
            throw ParseError("curve row out of range", lineno);
        curve.points.push_back(p);
    }
    if (!header) throw ParseError("empty curve file", 0);
    return curve;
}

RelaxationCurve read_curve(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open curve file: " + path.string());
    return read_curve(in);
}

namespace {

// JSON cannot carry inf/nan; encode them as strings.
nlohmann::json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

double denum(const nlohmann::json& j) {
    if (j.is_number()) return j.get<double>();
    const auto s = j.get<std::string>();
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    return NAN;
}

} // namespace

std::string fit_to_json(const FitResult& fit, const MeasurementPlan* plan, std::optional<std::uint64_t> seed) {
    nlohmann::ordered_json j;
    j["t1_s"] = num(fit.t1_hat);
    j["t1_stderr_s"] = num(fit.t1_stderr);
    j["amplitude"] = num(fit.amplitude);
    j["baseline"] = num(fit.baseline);
    auto cov = nlohmann::json::array();
    for (const auto& row : fit.covariance) {
        auto jr = nlohmann::json::array();
        for (double v : row) jr.push_back(num(v));
        cov.push_back(jr);
    }
    j["covariance"] = cov;
    j["reduced_chi_sq"] = num(fit.reduced_chi_sq);
    j["converged"] = fit.converged;
    j["ill_conditioned"] = fit.ill_conditioned;
    j["weighted"] = fit.weighted;
    j["iterations"] = fit.iterations;
    j["message"] = fit.message;
    if (seed) j["seed"] = *seed;
    if (plan) {
        j["plan"] = {{"dark_times_s", plan->dark_times},
                     {"shots_per_point", plan->shots_per_point},
                     {"detection_window_s", plan->detection_window},
                     {"photon_rate_per_s", plan->photon_rate},
                     {"contrast", plan->contrast},
                     {"include_reference", plan->include_reference}};
    }
    // nlohmann emits shortest round-trip decimals, so doubles survive exactly.
    return j.dump(2) + "\n";
}

FitResult fit_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.what(), 0);
    }
    FitResult f;
    try {
        f.t1_hat = denum(j.at("t1_s"));
        f.t1_stderr = denum(j.at("t1_stderr_s"));
        f.amplitude = denum(j.at("amplitude"));
        f.baseline = denum(j.at("baseline"));
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) f.covariance[a][b] = denum(j.at("covariance").at(a).at(b));
        f.reduced_chi_sq = denum(j.at("reduced_chi_sq"));
        f.converged = j.at("converged").get<bool>();
        f.ill_conditioned = j.at("ill_conditioned").get<bool>();
        f.weighted = j.at("weighted").get<bool>();
        f.iterations = j.at("iterations").get<int>();
        f.message = j.at("message").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("fit JSON: ") + e.what(), 0);
    }
    return f;
}

} // namespace rbm
