#include "tracescope/pipeline.hpp"

#include <cmath>

#include "tracescope/error.hpp"

namespace tracescope {

void PipelineConfig::validate() const {
    als.validate();
    peaks.validate();
    if (!(window_seconds > 0.0)) throw InvalidArgument("window_seconds must be > 0");
    (void)scale_grid();
    if (image_size < 4) throw InvalidArgument("image_size must be at least 4");
    if (global_amplitude && !(*global_amplitude > 0.0 && std::isfinite(*global_amplitude)))
        throw InvalidArgument("global_amplitude must be positive");
}

std::optional<double> render_amplitude(const PipelineConfig& cfg, double fallback) {
    if (cfg.normalization == Normalization::PerImage) return std::nullopt;
    return cfg.global_amplitude ? *cfg.global_amplitude : fallback;
}

}  // namespace tracescope
