#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "tracescope/image.hpp"
#include "tracescope/trace.hpp"

namespace tracescope {

/// Normalized Mexican hat: 2 / (sqrt(3) pi^(1/4)) (1 - t^2) exp(-t^2 / 2).
double ricker(double t) noexcept;

/// Strictly increasing, positive wavelet scales in seconds.
class ScaleGrid {
public:
    explicit ScaleGrid(std::vector<double> scales);

    /// `count` scales spaced evenly in log between lo and hi inclusive.
    static ScaleGrid log_spaced(double lo, double hi, std::size_t count);

    std::span<const double> scales() const noexcept { return scales_; }
    std::size_t size() const noexcept { return scales_.size(); }
    double operator[](std::size_t i) const noexcept { return scales_[i]; }

private:
    std::vector<double> scales_;
};

/// CWT coefficients, row s = scale index, column n = time index.
struct Scalogram {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> coefficients;  // row-major
    std::vector<double> scales;
    double dt = 0.0;

    double at(std::size_t s, std::size_t n) const noexcept { return coefficients[s * cols + n]; }
    double max_abs() const noexcept;
};

/// coefficients[s][n] = sum_{n'} x[n'] psi((n' - n) dt / scale_s), evaluated
/// over the finite window with implicit zeros outside. The wavelet is
/// tabulated once per scale and lag, then convolved.
Scalogram cwt_transform(std::span<const double> x, const ScaleGrid& grid, double dt);
Scalogram cwt_transform(const TimeWindow& window, const ScaleGrid& grid, double dt);

enum class Normalization { PerImage, Global };

/// Signed diverging colormap (blue -A, white 0, red +A) followed by bilinear
/// resampling to size x size. Smallest scale is the top row. When
/// `amplitude` is empty A = max|coefficients|; otherwise the supplied A is
/// used and values beyond it saturate. A = 0 yields a mid-gray image.
RgbImage render_scalogram(const Scalogram& s, int size, std::optional<double> amplitude = {});

/// Colormap lookup for u in [-1, 1].
void diverging_color(double u, std::uint8_t& r, std::uint8_t& g, std::uint8_t& b) noexcept;

}  // namespace tracescope
