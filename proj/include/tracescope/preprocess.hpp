#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tracescope/banded.hpp"
#include "tracescope/trace.hpp"

namespace tracescope {

/// Penalized least-squares baseline settings. `weight` is the fidelity
/// weight applied to every sample; `lambda` scales the second-difference
/// roughness penalty.
struct AlsConfig {
    double lambda = 1e4;
    double weight = 0.5;

    void validate() const;
};

struct Baseline {
    std::vector<double> values;
};

struct PeakConfig {
    double min_height = 0.1;
    double min_spacing_seconds = 10.0;

    void validate() const;
};

enum class StepPolarity { Rising, Falling };

struct PeakEvent {
    std::size_t index = 0;
    double amplitude = 0.0;  // signed residual value at index
    StepPolarity polarity = StepPolarity::Rising;
};

/// Affine map onto [0, 1]. A constant signal maps to all zeros.
Signal normalize_minmax(const Signal& signal);

/// Exact minimizer of sum w (y - z)^2 + lambda * sum (z_i - 2 z_{i-1} + z_{i-2})^2,
/// obtained from one banded solve of (w I + lambda D^T D) z = w y.
/// Throws InvalidArgument for signals shorter than 3 samples.
Baseline estimate_baseline_als(const Signal& signal, const AlsConfig& cfg);

/// Value of the ALS cost for a candidate baseline z.
double als_cost(std::span<const double> y, std::span<const double> z, const AlsConfig& cfg);

/// The matrix w I + lambda D^T D for a signal of length n.
SymmetricPentadiagonal als_system_matrix(std::size_t n, const AlsConfig& cfg);

Signal subtract_baseline(const Signal& signal, const Baseline& baseline);

/// Local maxima of |residual| at least min_height tall. When two candidates
/// lie closer than min_spacing the taller one wins (greedy, tallest first).
/// Output is sorted by index.
std::vector<PeakEvent> detect_peaks(const Signal& residual, const PeakConfig& cfg);

/// Number of samples spanned by a window of the given duration: round(seconds/dt) + 1.
std::size_t window_length(double window_seconds, double dt);

/// Window of window_length(window_seconds, dt) samples centred on `center`.
/// Samples outside the signal are zero.
TimeWindow extract_window(const Signal& signal, std::ptrdiff_t center, double window_seconds);
TimeWindow extract_window(const Signal& signal, const PeakEvent& peak, double window_seconds);

/// `count` distinct, fully interior windows whose centres lie at least
/// window_seconds/2 from every peak, chosen uniformly with the given seed and
/// returned in increasing centre order. Throws InvalidArgument (reporting the
/// achievable count) when too few centres qualify.
std::vector<TimeWindow> extract_oob_windows(const Signal& residual,
                                            std::span<const PeakEvent> peaks,
                                            double window_seconds, std::size_t count,
                                            std::uint64_t rng_seed);

/// Centres that extract_oob_windows may choose from.
std::vector<std::size_t> peak_free_centers(std::size_t signal_length,
                                           std::span<const PeakEvent> peaks,
                                           double window_seconds, double dt);

/// Normalization, baseline, residual and peaks of one channel.
struct PreprocessConfig {
    AlsConfig als;
    PeakConfig peaks;
    double window_seconds = 10.0;
};

struct PreprocessedSignal {
    Signal normalized;
    Baseline baseline;
    Signal residual;
    std::vector<PeakEvent> peaks;
};

PreprocessedSignal preprocess(const Signal& raw, const PreprocessConfig& cfg);

}  // namespace tracescope
