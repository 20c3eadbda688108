#include "tracescope/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tracescope/error.hpp"
#include "tracescope/rng.hpp"

namespace tracescope {

void AlsConfig::validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("ALS lambda must be > 0");
    if (!(weight > 0.0 && weight <= 1.0)) throw InvalidArgument("ALS weight must lie in (0, 1]");
}

void PeakConfig::validate() const {
    if (!(min_height > 0.0)) throw InvalidArgument("peak min_height must be > 0");
    if (!(min_spacing_seconds > 0.0)) throw InvalidArgument("peak min_spacing_seconds must be > 0");
}

Signal normalize_minmax(const Signal& signal) {
    const auto v = signal.values();
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = *lo_it;
    const double range = *hi_it - lo;
    std::vector<double> out(v.size(), 0.0);
    if (range > 0.0) {
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - lo) / range;
    }
    return signal.with_values(std::move(out));
}

SymmetricPentadiagonal als_system_matrix(std::size_t n, const AlsConfig& cfg) {
    SymmetricPentadiagonal a(n);
    for (std::size_t i = 0; i < n; ++i) a.diag[i] = cfg.weight;
    // Accumulate lambda * d d^T for every second-difference row d = (1, -2, 1).
    constexpr double coeff[3] = {1.0, -2.0, 1.0};
    for (std::size_t r = 0; r + 2 < n; ++r) {
        for (std::size_t p = 0; p < 3; ++p) {
            a.diag[r + p] += cfg.lambda * coeff[p] * coeff[p];
            if (p + 1 < 3) a.sub1[r + p] += cfg.lambda * coeff[p + 1] * coeff[p];
        }
        a.sub2[r] += cfg.lambda * coeff[2] * coeff[0];
    }
    return a;
}

Baseline estimate_baseline_als(const Signal& signal, const AlsConfig& cfg) {
    cfg.validate();
    const std::size_t n = signal.size();
    if (n < 3) throw InvalidArgument("ALS baseline needs at least 3 samples");
    const PentadiagonalLdlt solver(als_system_matrix(n, cfg));
    // Solve for the offset e = z - y: (wI + lambda D'D) e = -lambda D'D y.
    std::vector<double> rhs(n, 0.0);
    for (std::size_t i = 0; i + 2 < n; ++i) {
        const double d2 = cfg.lambda * (signal[i] - 2.0 * signal[i + 1] + signal[i + 2]);
        rhs[i] -= d2;
        rhs[i + 1] += 2.0 * d2;
        rhs[i + 2] -= d2;
    }
    auto z = solver.solve(rhs);
    for (std::size_t i = 0; i < n; ++i) z[i] += signal[i];
    return Baseline{std::move(z)};
}

double als_cost(std::span<const double> y, std::span<const double> z, const AlsConfig& cfg) {
    if (y.size() != z.size()) throw ShapeError("ALS cost: length mismatch");
    double fit = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) fit += (y[i] - z[i]) * (y[i] - z[i]);
    double rough = 0.0;
    for (std::size_t i = 2; i < z.size(); ++i) {
        const double d2 = z[i] - 2.0 * z[i - 1] + z[i - 2];
        rough += d2 * d2;
    }
    return cfg.weight * fit + cfg.lambda * rough;
}

Signal subtract_baseline(const Signal& signal, const Baseline& baseline) {
    if (baseline.values.size() != signal.size())
        throw ShapeError("baseline length " + std::to_string(baseline.values.size()) +
                         " does not match signal length " + std::to_string(signal.size()));
    std::vector<double> out(signal.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = signal[i] - baseline.values[i];
    return signal.with_values(std::move(out));
}

namespace {

std::size_t spacing_samples(double seconds, double dt) {
    return static_cast<std::size_t>(std::llround(seconds / dt));
}

// Rising steps leave a negative residual lobe before the step and a positive
// lobe after it; falling steps the reverse.
StepPolarity classify_polarity(std::span<const double> r, std::size_t k) {
    constexpr std::size_t reach = 5;
    double balance = 0.0;
    for (std::size_t j = 1; j <= reach; ++j) {
        if (k + j < r.size()) balance += r[k + j];
        if (k >= j) balance -= r[k - j];
    }
    if (balance > 0.0) return StepPolarity::Rising;
    if (balance < 0.0) return StepPolarity::Falling;
    return r[k] >= 0.0 ? StepPolarity::Rising : StepPolarity::Falling;
}

}  // namespace

std::vector<PeakEvent> detect_peaks(const Signal& residual, const PeakConfig& cfg) {
    cfg.validate();
    const auto r = residual.values();
    const std::size_t n = r.size();
    std::vector<std::size_t> candidates;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double a = std::abs(r[i]);
        if (a >= cfg.min_height && a >= std::abs(r[i - 1]) && a > std::abs(r[i + 1]))
            candidates.push_back(i);
    }
    std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(r[a]) > std::abs(r[b]);
    });

    const std::size_t spacing = spacing_samples(cfg.min_spacing_seconds, residual.dt());
    std::vector<std::size_t> kept;
    for (const auto c : candidates) {
        const bool clear = std::all_of(kept.begin(), kept.end(), [&](std::size_t k) {
            return (c > k ? c - k : k - c) >= spacing;
        });
        if (clear) kept.push_back(c);
    }
    std::sort(kept.begin(), kept.end());

    std::vector<PeakEvent> peaks;
    peaks.reserve(kept.size());
    for (const auto k : kept) peaks.push_back({k, r[k], classify_polarity(r, k)});
    return peaks;
}

std::size_t window_length(double window_seconds, double dt) {
    if (!(window_seconds > 0.0)) throw InvalidArgument("window length must be > 0 seconds");
    return static_cast<std::size_t>(std::llround(window_seconds / dt)) + 1;
}

TimeWindow extract_window(const Signal& signal, std::ptrdiff_t center, double window_seconds) {
    const std::size_t len = window_length(window_seconds, signal.dt());
    TimeWindow w;
    w.center_index = center;
    w.half_width_samples = (len - 1) / 2;
    w.samples.assign(len, 0.0);
    const auto n = static_cast<std::ptrdiff_t>(signal.size());
    const std::ptrdiff_t first = w.first_index();
    for (std::size_t j = 0; j < len; ++j) {
        const std::ptrdiff_t src = first + static_cast<std::ptrdiff_t>(j);
        if (src >= 0 && src < n) w.samples[j] = signal[static_cast<std::size_t>(src)];
    }
    return w;
}

TimeWindow extract_window(const Signal& signal, const PeakEvent& peak, double window_seconds) {
    return extract_window(signal, static_cast<std::ptrdiff_t>(peak.index), window_seconds);
}

std::vector<std::size_t> peak_free_centers(std::size_t signal_length,
                                           std::span<const PeakEvent> peaks,
                                           double window_seconds, double dt) {
    const std::size_t len = window_length(window_seconds, dt);
    const std::size_t left = (len - 1) / 2;
    const std::size_t right = len - 1 - left;
    const double clearance = window_seconds / 2.0;
    std::vector<std::size_t> centers;
    if (signal_length < len) return centers;
    for (std::size_t c = left; c + right < signal_length; ++c) {
        const bool clear = std::all_of(peaks.begin(), peaks.end(), [&](const PeakEvent& p) {
            const double gap = std::abs(static_cast<double>(c) - static_cast<double>(p.index)) * dt;
            return gap >= clearance - 1e-9;
        });
        if (clear) centers.push_back(c);
    }
    return centers;
}

std::vector<TimeWindow> extract_oob_windows(const Signal& residual,
                                            std::span<const PeakEvent> peaks,
                                            double window_seconds, std::size_t count,
                                            std::uint64_t rng_seed) {
    if (residual.size() <= window_length(window_seconds, residual.dt()))
        throw InvalidArgument("signal is not longer than the window");
    auto centers = peak_free_centers(residual.size(), peaks, window_seconds, residual.dt());
    if (centers.size() < count)
        throw InvalidArgument("only " + std::to_string(centers.size()) +
                              " peak-free window centres available, " + std::to_string(count) +
                              " requested");
    Rng rng(rng_seed);
    // Partial Fisher-Yates: the first `count` slots become the sample.
    for (std::size_t i = 0; i < count; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(centers.size() - i));
        std::swap(centers[i], centers[j]);
    }
    centers.resize(count);
    std::sort(centers.begin(), centers.end());

    std::vector<TimeWindow> out;
    out.reserve(count);
    for (const auto c : centers)
        out.push_back(extract_window(residual, static_cast<std::ptrdiff_t>(c), window_seconds));
    return out;
}

PreprocessedSignal preprocess(const Signal& raw, const PreprocessConfig& cfg) {
    Signal normalized = normalize_minmax(raw);
    Baseline baseline = estimate_baseline_als(normalized, cfg.als);
    Signal residual = subtract_baseline(normalized, baseline);
    auto peaks = detect_peaks(residual, cfg.peaks);
    return PreprocessedSignal{std::move(normalized), std::move(baseline), std::move(residual),
                              std::move(peaks)};
}

}  // namespace tracescope
