#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rbm/rng.hpp"

namespace rbm {

/// All-optical T1 protocol: polarise, wait tau in the dark, read out for a
/// window T_D; optionally a reference readout right after repolarisation.
struct MeasurementPlan {
    std::vector<double> dark_times;     // s, ascending
    std::uint64_t shots_per_point = 1'000'000;
    double detection_window = 500e-9;   // s
    double photon_rate = 1e5;           // counts/s
    double contrast = 0.2;
    bool include_reference = true;

    void validate() const;

    /// 12 log-spaced points from 1 us to 5 * expected_t1.
    static std::vector<double> default_dark_times(double expected_t1, std::size_t points = 12);
};

/// Expected normalised signal 1 - C + C exp(-tau / t1).
double expected_signal(double tau, double t1, double contrast);

struct CurvePoint {
    double tau = 0.0;
    double signal = 0.0;    // normalised by the reference
    double std_error = 0.0;
};

struct CountTally {
    std::uint64_t signal = 0;
    std::uint64_t reference = 0;
};

struct RelaxationCurve {
    std::vector<CurvePoint> points;
    std::vector<CountTally> raw_counts; // empty for curves read from file
};

/// Poisson photon counting for every dark time. Shot totals are drawn as one
/// Poisson variate per point (the sum of iid Poisson shots), which is exact
/// in distribution and independent of shot count in cost.
RelaxationCurve simulate_curve(double t1_true, const MeasurementPlan& plan, std::uint64_t seed);

struct FitResult {
    double t1_hat = 0.0;
    double t1_stderr = 0.0;
    double amplitude = 0.0;
    double baseline = 0.0;
    /// Parameter order: baseline, amplitude, t1.
    std::array<std::array<double, 3>, 3> covariance{};
    double reduced_chi_sq = 0.0;
    bool converged = false;
    bool ill_conditioned = false;
    bool weighted = true;
    int iterations = 0;
    std::string message;
};

struct FitGuess {
    double baseline = 0.0;
    double amplitude = 0.0;
    double t1 = 0.0;
};

/// Heuristic start: baseline from the last point, amplitude from first minus
/// last, T1 where the data cross baseline + amplitude / e.
FitGuess initial_guess(const RelaxationCurve& curve);

/// Weighted Levenberg-Marquardt fit of baseline + amplitude exp(-tau / t1).
/// Points are sorted by tau first, so row order does not matter.
FitResult fit_exponential(const RelaxationCurve& curve, std::optional<FitGuess> guess = std::nullopt);

struct SpotTruth {
    double t1 = 0.0;
    double density = 0.0;  // 1/m^3, after jitter
    double diameter = 0.0; // m, after jitter
};

struct SpotRecord {
    SpotTruth truth;
    RelaxationCurve curve;
    FitResult fit;
    std::uint64_t curve_seed = 0;
};

/// Draws a per-spot truth from the caller's scenario distribution.
using SpotSampler = std::function<SpotTruth(Engine&)>;

/// Spot i uses derive_seed(seed, 2i) for its parameters and
/// derive_seed(seed, 2i + 1) for its photon counts. Fit failures are recorded
/// per spot and never abort the ensemble.
std::vector<SpotRecord> simulate_spot_ensemble(const SpotSampler& sampler, std::size_t n_spots,
                                               const MeasurementPlan& plan, std::uint64_t seed);

struct GaussianSummary {
    double mean = 0.0;
    double sigma = 0.0; // maximum-likelihood (divides by n)
    std::size_t count = 0;
};

GaussianSummary gaussian_summary(std::span<const double> samples);

struct Separation {
    double geometric = 0.0; // |dmu| / sqrt(sigma_a sigma_b)
    double pooled = 0.0;    // |dmu| / sqrt((sigma_a^2 + sigma_b^2) / 2)
    double of_means = 0.0;  // |dmu| / sqrt(sigma_a^2 / n_a + sigma_b^2 / n_b)
};

Separation separation(const GaussianSummary& a, const GaussianSummary& b);

// Text formats ---------------------------------------------------------------

/// `tau_s,signal,stderr` with a header line; 17 significant digits.
void write_curve(std::ostream& out, const RelaxationCurve& curve);
void write_curve(const std::filesystem::path& path, const RelaxationCurve& curve);
RelaxationCurve read_curve(std::istream& in);
RelaxationCurve read_curve(const std::filesystem::path& path);

/// JSON object with the fit, and when given, the seed and plan that produced the data.
std::string fit_to_json(const FitResult& fit, const MeasurementPlan* plan = nullptr,
                        std::optional<std::uint64_t> seed = std::nullopt);
FitResult fit_from_json(const std::string& text);

/// Formats with 17 significant digits.
std::string format_double(double v);

} // namespace rbm
