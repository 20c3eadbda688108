#pragma once

#include <cstddef>
#include <optional>

#include "tracescope/cwt.hpp"
#include "tracescope/preprocess.hpp"

namespace tracescope {

/// Everything needed to turn a raw channel into scalogram images.
struct PipelineConfig {
    AlsConfig als;
    PeakConfig peaks;
    double window_seconds = 10.0;
    double scale_min_seconds = 0.2;
    double scale_max_seconds = 5.0;
    std::size_t scale_count = 32;
    int image_size = 64;
    Normalization normalization = Normalization::PerImage;
    /// Fixed colour range for Normalization::Global. When unset, dataset
    /// builders use the largest |coefficient| in the dataset.
    std::optional<double> global_amplitude;

    PreprocessConfig preprocess() const { return {als, peaks, window_seconds}; }
    ScaleGrid scale_grid() const {
        return ScaleGrid::log_spaced(scale_min_seconds, scale_max_seconds, scale_count);
    }
    void validate() const;
};

/// The amplitude to render with: empty for per-image mode, otherwise the
/// configured global amplitude (or `fallback` when none is configured).
std::optional<double> render_amplitude(const PipelineConfig& cfg, double fallback);

}  // namespace tracescope
