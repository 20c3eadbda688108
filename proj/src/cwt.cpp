#include "tracescope/cwt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tracescope/error.hpp"

namespace tracescope {

double ricker(double t) noexcept {
    // 2 / (sqrt(3) * pi^(1/4))
    static const double norm = 2.0 / (std::sqrt(3.0) * std::pow(std::numbers::pi, 0.25));
    const double t2 = t * t;
    return norm * (1.0 - t2) * std::exp(-0.5 * t2);
}

ScaleGrid::ScaleGrid(std::vector<double> scales) : scales_(std::move(scales)) {
    if (scales_.empty()) throw InvalidArgument("scale grid is empty");
    for (std::size_t i = 0; i < scales_.size(); ++i) {
        if (!(scales_[i] > 0.0) || !std::isfinite(scales_[i]))
            throw InvalidArgument("scales must be positive and finite");
        if (i > 0 && !(scales_[i] > scales_[i - 1]))
            throw InvalidArgument("scales must be strictly increasing");
    }
}

ScaleGrid ScaleGrid::log_spaced(double lo, double hi, std::size_t count) {
    if (count == 0) throw InvalidArgument("scale count must be positive");
    if (!(lo > 0.0) || !(hi > lo)) throw InvalidArgument("need 0 < lo < hi for a scale grid");
    if (count == 1) return ScaleGrid({lo});
    std::vector<double> s(count);
    const double step = std::log(hi / lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) s[i] = lo * std::exp(step * static_cast<double>(i));
    s.back() = hi;
    return ScaleGrid(std::move(s));
}

double Scalogram::max_abs() const noexcept {
    double m = 0.0;
    for (const double v : coefficients) m = std::max(m, std::abs(v));
    return m;
}

Scalogram cwt_transform(std::span<const double> x, const ScaleGrid& grid, double dt) {
    if (x.empty()) throw InvalidArgument("cannot transform an empty window");
    if (!(dt > 0.0)) throw InvalidArgument("dt must be > 0");
    const std::size_t n = x.size();
    Scalogram out;
    out.rows = grid.size();
    out.cols = n;
    out.coefficients.assign(out.rows * out.cols, 0.0);
    out.scales.assign(grid.scales().begin(), grid.scales().end());
    out.dt = dt;

    // kernel[lag + n - 1] = psi(lag * dt / f) for lag in [-(n-1), n-1]
    std::vector<double> kernel(2 * n - 1);
    for (std::size_t s = 0; s < grid.size(); ++s) {
        const double f = grid[s];
        for (std::size_t k = 0; k < kernel.size(); ++k) {
            const double lag = static_cast<double>(static_cast<std::ptrdiff_t>(k) -
                                                   static_cast<std::ptrdiff_t>(n - 1));
            kernel[k] = ricker(lag * dt / f);
        }
        double* row = out.coefficients.data() + s * n;
        for (std::size_t t = 0; t < n; ++t) {
            // lag = n' - t  ->  kernel index n' - t + n - 1
            const double* k = kernel.data() + (n - 1 - t);
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += x[j] * k[j];
            row[t] = acc;
        }
    }
    return out;
}

Scalogram cwt_transform(const TimeWindow& window, const ScaleGrid& grid, double dt) {
    return cwt_transform(std::span<const double>(window.samples), grid, dt);
}

void diverging_color(double u, std::uint8_t& r, std::uint8_t& g, std::uint8_t& b) noexcept {
    u = std::clamp(u, -1.0, 1.0);
    const auto fade = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - std::abs(u))));
    if (u < 0.0) {
        r = fade;
        g = fade;
        b = 255;
    } else {
        r = 255;
        g = fade;
        b = fade;
    }
}

RgbImage render_scalogram(const Scalogram& s, int size, std::optional<double> amplitude) {
    if (size <= 0) throw InvalidArgument("image size must be positive");
    if (s.rows == 0 || s.cols == 0) throw ShapeError("empty scalogram");
    const double a = amplitude ? *amplitude : s.max_abs();
    if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidArgument("render amplitude must be finite and >= 0");
    if (a == 0.0) return RgbImage(size, size, 128);

    RgbImage img(size, size);
    const auto denom = static_cast<double>(std::max(size - 1, 1));
    for (int py = 0; py < size; ++py) {
        const double sy = static_cast<double>(py) * static_cast<double>(s.rows - 1) / denom;
        const auto y0 = static_cast<std::size_t>(sy);
        const std::size_t y1 = std::min(y0 + 1, s.rows - 1);
        const double fy = sy - static_cast<double>(y0);
        for (int px = 0; px < size; ++px) {
            const double sx = static_cast<double>(px) * static_cast<double>(s.cols - 1) / denom;
            const auto x0 = static_cast<std::size_t>(sx);
            const std::size_t x1 = std::min(x0 + 1, s.cols - 1);
            const double fx = sx - static_cast<double>(x0);
            const double top = (1.0 - fx) * s.at(y0, x0) + fx * s.at(y0, x1);
            const double bottom = (1.0 - fx) * s.at(y1, x0) + fx * s.at(y1, x1);
            const double v = (1.0 - fy) * top + fy * bottom;
            std::uint8_t r, g, b;
            diverging_color(v / a, r, g, b);
            img.set(px, py, r, g, b);
        }
    }
    return img;
}

}  // namespace tracescope
